//! Word n-gram prior with stupid backoff.
//!
//! Counts are gathered over per-transcript token streams in which every
//! utterance starts with [`UTTERANCE_START`], so higher-order n-grams may span
//! an utterance boundary. A query in [`ContextMode::Utterance`] cuts the history
//! at the masked utterance's own start marker; [`ContextMode::Discourse`] lets it
//! reach back into the preceding utterances of the window.

use std::collections::HashMap;

use super::{unigram_prior, PriorDistribution, PriorError, PriorSource, PriorSourceKind, UnigramModel};
use crate::corpus::{ContextWindow, Corpus};
use crate::vocabulary::CandidateVocab;

pub const UTTERANCE_START: &str = "<s>";
pub const DEFAULT_BACKOFF: f64 = 0.4;

/// How much of the context window the history may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// Tokens to the left of the mask inside its own utterance.
    Utterance,
    /// Preceding utterances of the window, then the left part of the masked one.
    Discourse,
}

#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    backoff: f64,
    /// Counts of n-grams of length 2..=order, keyed by the full n-gram.
    ngrams: HashMap<Vec<String>, u64>,
    /// For each history, how often it was followed by any token.
    histories: HashMap<Vec<String>, u64>,
    unigram: UnigramModel,
    tokens_seen: u64,
}

impl NgramModel {
    /// Trains on a corpus. The unigram base level is the pseudocount-smoothed
    /// model, so a fully backed-off query equals the unigram prior.
    pub fn train(corpus: &Corpus, order: usize, backoff: f64, unigram: UnigramModel) -> Self {
        assert!(order >= 1, "order must be at least 1");
        assert!(backoff > 0.0 && backoff <= 1.0, "backoff factor must be in (0, 1]");
        let mut model = NgramModel {
            order,
            backoff,
            ngrams: HashMap::new(),
            histories: HashMap::new(),
            unigram,
            tokens_seen: 0,
        };
        for transcript in corpus.transcripts() {
            let mut stream: Vec<&str> = Vec::new();
            for utt in transcript {
                stream.push(UTTERANCE_START);
                stream.extend(utt.gloss_tokens.iter().map(String::as_str));
            }
            model.add_stream(&stream);
        }
        model
    }

    fn add_stream(&mut self, stream: &[&str]) {
        self.tokens_seen += stream.len() as u64;
        for n in 2..=self.order {
            for gram in stream.windows(n) {
                // n-grams never predict the start marker
                if gram[n - 1] == UTTERANCE_START {
                    continue;
                }
                let gram: Vec<String> = gram.iter().map(|s| s.to_string()).collect();
                *self.histories.entry(gram[..n - 1].to_vec()).or_insert(0) += 1;
                *self.ngrams.entry(gram).or_insert(0) += 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn backoff(&self) -> f64 {
        self.backoff
    }

    pub fn tokens_seen(&self) -> u64 {
        self.tokens_seen
    }

    pub fn unigram(&self) -> &UnigramModel {
        &self.unigram
    }

    /// History tokens for a query, oldest first.
    pub fn history(ctx: &ContextWindow, mode: ContextMode) -> Vec<&str> {
        let mut h = Vec::new();
        if mode == ContextMode::Discourse {
            for u in &ctx.before {
                h.push(UTTERANCE_START);
                h.extend(u.gloss_tokens.iter().map(String::as_str));
            }
        }
        h.push(UTTERANCE_START);
        h.extend(ctx.left_of_mask().iter().map(String::as_str));
        h
    }

    /// Normalized distribution over `vocab` given a history.
    pub fn distribution(&self, history: &[&str], vocab: &CandidateVocab) -> PriorDistribution {
        let base = unigram_prior(&self.unigram, vocab);
        let top = self.order.min(history.len() + 1);
        if top < 2 {
            return relabel(base);
        }

        let mut backoffs = Vec::with_capacity(vocab.len());
        let mut level_probs = Vec::with_capacity(vocab.len());
        let mut key: Vec<String> = Vec::with_capacity(top);
        for (i, word) in vocab.words().enumerate() {
            let mut found = None;
            for n in (2..=top).rev() {
                key.clear();
                key.extend(history[history.len() + 1 - n..].iter().map(|s| s.to_string()));
                let Some(&hist_count) = self.histories.get(&key) else {
                    continue;
                };
                key.push(word.to_string());
                if let Some(&c) = self.ngrams.get(&key) {
                    found = Some((top - n, c as f64 / hist_count as f64));
                    break;
                }
            }
            let (k, p) = found.unwrap_or((top - 1, base.probs()[i]));
            backoffs.push(k);
            level_probs.push(p);
        }

        if backoffs.iter().all(|k| *k == top - 1) {
            return relabel(base);
        }

        let min_k = *backoffs.iter().min().expect("vocab non-empty");
        let scores: Vec<f64> = backoffs
            .iter()
            .zip(&level_probs)
            .map(|(k, p)| self.backoff.powi((k - min_k) as i32) * p)
            .collect();
        let total: f64 = scores.iter().sum();
        PriorDistribution {
            probs: scores.iter().map(|s| s / total).collect(),
            source: PriorSourceKind::Ngram,
        }
    }
}

fn relabel(mut p: PriorDistribution) -> PriorDistribution {
    p.source = PriorSourceKind::Ngram;
    p
}

/// An [`NgramModel`] queried with a fixed [`ContextMode`].
#[derive(Debug, Clone)]
pub struct NgramPrior {
    pub model: NgramModel,
    pub mode: ContextMode,
}

impl PriorSource for NgramPrior {
    fn kind(&self) -> PriorSourceKind {
        PriorSourceKind::Ngram
    }

    fn is_context_invariant(&self) -> bool {
        self.model.order == 1
    }

    fn prior(&self, ctx: &ContextWindow, vocab: &CandidateVocab) -> Result<PriorDistribution, PriorError> {
        let history = NgramModel::history(ctx, self.mode);
        Ok(self.model.distribution(&history, vocab))
    }
}
