//! Synthetic corpora with known generating parameters.
//!
//! Words are three distinct segments over an eight-symbol alphabet, and
//! productions are drawn from every sequence of length 2 to 4 over the same
//! alphabet with weight `exp(-β · dist)`. Because any such word maps onto any
//! other by relabeling the alphabet, the normalizer over the data space is the
//! same for every word, so the edit-distance likelihood is the exact generating
//! model and calibration should recover `β`.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ContextWindow, Corpus, ProductionToken, Speaker, TokenKind, Utterance};
use crate::phonology::{levenshtein, Phoneme, PhonemeSeq};
use crate::vocabulary::{CandidateVocab, VocabEntry};

pub const ALPHABET: [&str; 8] = ["p", "t", "k", "s", "m", "n", "l", "f"];

fn seq(symbols: &[usize]) -> PhonemeSeq {
    PhonemeSeq::new(
        symbols
            .iter()
            .map(|&i| Phoneme::new(ALPHABET[i]).expect("valid symbol"))
            .collect(),
    )
    .expect("non-empty")
}

/// `n` words named `w00`, `w01`, … with distinct three-segment citations.
pub fn random_vocab<R: Rng>(n: usize, rng: &mut R) -> CandidateVocab {
    // 8·7·6 ordered triples of distinct symbols
    let triples: Vec<[usize; 3]> = (0..8)
        .flat_map(|a| (0..8).flat_map(move |b| (0..8).map(move |c| [a, b, c])))
        .filter(|[a, b, c]| a != b && b != c && a != c)
        .collect();
    assert!(n <= triples.len(), "at most {} words", triples.len());
    let width = (n.max(2) - 1).to_string().len().max(2);
    let entries = sample(rng, triples.len(), n)
        .into_iter()
        .enumerate()
        .map(|(i, t)| VocabEntry {
            word: format!("w{i:0width$}"),
            citation: seq(&triples[t]),
            syllables: 1,
            count: 0,
        })
        .collect();
    CandidateVocab::from_entries(entries).expect("distinct names")
}

/// A vocabulary of exactly `n` words with distinct citations, for size-driven checks.
pub fn sized_vocab(n: usize) -> CandidateVocab {
    let width = (n.max(2) - 1).to_string().len();
    let entries = (0..n)
        .map(|i| {
            // base-8 digits, at least one segment
            let mut digits = Vec::new();
            let mut k = i;
            loop {
                digits.push(k % 8);
                k /= 8;
                if k == 0 {
                    break;
                }
            }
            VocabEntry {
                word: format!("v{i:0width$}"),
                citation: seq(&digits),
                syllables: 1,
                count: 0,
            }
        })
        .collect();
    CandidateVocab::from_entries(entries).expect("distinct names")
}

/// Samples productions of each vocabulary word with probability
/// proportional to `exp(-β · dist(citation, d))` over the data space.
pub struct NoiseChannel {
    data: Vec<PhonemeSeq>,
    tables: Vec<WeightedIndex<f64>>,
    beta: f64,
}

impl NoiseChannel {
    pub fn new(vocab: &CandidateVocab, beta: f64) -> Self {
        let mut raw: Vec<Vec<usize>> = Vec::new();
        for len in 2..=4u32 {
            for code in 0..8usize.pow(len) {
                raw.push((0..len).map(|j| code / 8usize.pow(j) % 8).collect());
            }
        }
        let syms: Vec<Vec<&str>> = raw.iter().map(|s| s.iter().map(|&i| ALPHABET[i]).collect()).collect();
        let tables = vocab
            .entries()
            .iter()
            .map(|e| {
                let cit: Vec<&str> = e.citation.segments().iter().map(Phoneme::as_str).collect();
                let weights = syms.iter().map(|d| (-beta * levenshtein(&cit, d) as f64).exp());
                WeightedIndex::new(weights).expect("positive weights")
            })
            .collect();
        NoiseChannel {
            data: raw.iter().map(|s| seq(s)).collect(),
            tables,
            beta,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Size of the data space.
    pub fn data_len(&self) -> usize {
        self.data.len()
    }

    pub fn sample<R: Rng>(&self, word_index: usize, rng: &mut R) -> PhonemeSeq {
        self.data[self.tables[word_index].sample(rng)].clone()
    }
}

fn utterance(tid: &str, idx: u64, words: Vec<String>, phon: Vec<PhonemeSeq>, age: f64) -> Utterance {
    Utterance {
        transcript_id: tid.to_string(),
        utterance_index: idx,
        speaker: Speaker::Child,
        gloss_tokens: words,
        phon_tokens: Some(phon),
        age_months: Some(age),
    }
}

/// `n_tokens` one-word successes with uniformly drawn glosses and productions
/// from `channel`.
pub fn beta_recovery_tokens(
    vocab: &CandidateVocab,
    channel: &NoiseChannel,
    n_tokens: usize,
    seed: u64,
) -> Vec<ProductionToken> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_tokens)
        .map(|i| {
            let w = rng.random_range(0..vocab.len());
            let observed = channel.sample(w, &mut rng);
            let gloss = vocab.word(w).to_string();
            let utt = Arc::new(utterance(
                "synthetic",
                i as u64,
                vec![gloss.clone()],
                vec![observed.clone()],
                24.0,
            ));
            ProductionToken {
                id: ProductionToken::make_id("synthetic", i as u64, 0),
                observed,
                kind: TokenKind::Success { gloss },
                context: ContextWindow::single(utt, 0),
                age_months: Some(24.0),
                transcript_id: "synthetic".into(),
                utterance_index: i as u64,
                token_index: 0,
            }
        })
        .collect()
}

/// A first-order Markov chain over vocabulary indices with skewed start and
/// transition distributions.
#[derive(Debug, Clone)]
pub struct BigramProcess {
    pub start: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

impl BigramProcess {
    /// Zipfian start distribution; each word has a few strongly preferred
    /// successors plus a small Zipfian background.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let zipf = |rng: &mut R| {
            let ranks = sample(rng, n, n).into_vec();
            let mut p = vec![0.0; n];
            for (r, &i) in ranks.iter().enumerate() {
                p[i] = 1.0 / (r + 1) as f64;
            }
            let z: f64 = p.iter().sum();
            p.iter().map(|x| x / z).collect::<Vec<f64>>()
        };
        let start = zipf(rng);
        let transitions = (0..n)
            .map(|_| {
                let mut row: Vec<f64> = zipf(rng).iter().map(|p| 0.1 * p).collect();
                for (w, idx) in [0.5, 0.25, 0.1, 0.05].iter().zip(sample(rng, n, 4.min(n))) {
                    row[idx] += w;
                }
                row
            })
            .collect();
        BigramProcess { start, transitions }
    }

    pub fn utterance<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        let mut prev: Option<usize> = None;
        for _ in 0..len {
            let row = match prev {
                Some(p) => &self.transitions[p],
                None => &self.start,
            };
            let w = WeightedIndex::new(row).expect("valid row").sample(rng);
            out.push(w);
            prev = Some(w);
        }
        out
    }
}

/// A corpus drawn from a [`BigramProcess`] with every token corrupted by a
/// [`NoiseChannel`], and every token exposed as a success with its discourse
/// window.
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub tokens: Vec<ProductionToken>,
}

pub fn bigram_corpus(
    vocab: &CandidateVocab,
    process: &BigramProcess,
    channel: &NoiseChannel,
    transcripts: usize,
    utterances_per_transcript: usize,
    window: usize,
    seed: u64,
) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    for t in 0..transcripts {
        let tid = format!("syn{t:03}");
        let age = 12.0 + (t % 24) as f64;
        for u in 0..utterances_per_transcript {
            let len = rng.random_range(2..=6);
            let idx = process.utterance(len, &mut rng);
            let words = idx.iter().map(|&i| vocab.word(i).to_string()).collect();
            let phon = idx.iter().map(|&i| channel.sample(i, &mut rng)).collect();
            all.push(utterance(&tid, u as u64, words, phon, age));
        }
    }
    let corpus = Corpus::new(all);
    let mut tokens = Vec::new();
    for utts in corpus.transcripts() {
        for (pos, utt) in utts.iter().enumerate() {
            let phon = utt.phon_tokens.as_ref().expect("generated with phon");
            for (ti, gloss) in utt.gloss_tokens.iter().enumerate() {
                tokens.push(ProductionToken {
                    id: ProductionToken::make_id(&utt.transcript_id, utt.utterance_index, ti),
                    observed: phon[ti].clone(),
                    kind: TokenKind::Success { gloss: gloss.clone() },
                    context: ContextWindow {
                        before: utts[pos.saturating_sub(window)..pos].to_vec(),
                        after: utts[pos + 1..(pos + 1 + window).min(utts.len())].to_vec(),
                        masked_utterance: Arc::clone(utt),
                        mask_index: ti,
                    },
                    age_months: utt.age_months,
                    transcript_id: utt.transcript_id.clone(),
                    utterance_index: utt.utterance_index,
                    token_index: ti,
                });
            }
        }
    }
    SyntheticCorpus { corpus, tokens }
}
