use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    syllable_count, ContextWindow, Corpus, CorpusError, ProductionToken, Speaker, TokenKind, Utterance, VowelInventory,
    PHONOLOGY_ONLY, UNINTELLIGIBLE,
};
use crate::phonology::PronunciationLexicon;

/// Why a corpus token was not selected. Every token gets exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NotChild,
    NoPhonTier,
    Unintelligible,
    NoNucleus,
    NotMonosyllabic,
    AmbiguousFailure,
    ContaminatedUtterance,
    EmptyGloss,
    NotInPriorVocab,
    NotInLexicon,
}

impl ExclusionReason {
    pub fn code(&self) -> &'static str {
        match self {
            ExclusionReason::NotChild => "not_child",
            ExclusionReason::NoPhonTier => "no_phon_tier",
            ExclusionReason::Unintelligible => "unintelligible",
            ExclusionReason::NoNucleus => "no_nucleus",
            ExclusionReason::NotMonosyllabic => "not_monosyllabic",
            ExclusionReason::AmbiguousFailure => "ambiguous_failure",
            ExclusionReason::ContaminatedUtterance => "contaminated_utterance",
            ExclusionReason::EmptyGloss => "empty_gloss",
            ExclusionReason::NotInPriorVocab => "not_in_prior_vocab",
            ExclusionReason::NotInLexicon => "not_in_lexicon",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub transcript_id: String,
    pub utterance_index: u64,
    pub token_index: usize,
    pub gloss: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone)]
pub struct SelectOptions {
    /// Utterances of context on each side of the masked one.
    pub window: usize,
    pub vowels: VowelInventory,
    /// Treat sequences with no vowel as monosyllabic instead of excluding them.
    pub include_vowelless: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            window: 20,
            vowels: VowelInventory::default(),
            include_vowelless: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub tokens: Vec<ProductionToken>,
    pub exclusions: Vec<Exclusion>,
}

impl Selection {
    pub fn successes(&self) -> impl Iterator<Item = &ProductionToken> {
        self.tokens.iter().filter(|t| t.is_success())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ProductionToken> {
        self.tokens.iter().filter(|t| !t.is_success())
    }

    pub fn exclusion_counts(&self) -> BTreeMap<ExclusionReason, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.exclusions {
            *counts.entry(e.reason).or_insert(0) += 1;
        }
        counts
    }
}

/// Picks child tokens for analysis.
///
/// A success is a monosyllabic child token in an utterance free of `xxx`/`yyy`
/// whose gloss is both in the prior whitelist and the lexicon. A failure is a
/// monosyllabic token glossed `yyy` that is the only `xxx`/`yyy` in its
/// utterance. Every other token is recorded with one exclusion reason.
pub fn select_tokens(
    corpus: &Corpus,
    lexicon: &PronunciationLexicon,
    prior_vocab: &HashSet<String>,
    opts: &SelectOptions,
) -> Selection {
    let per_transcript: Vec<Selection> = corpus
        .transcripts()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|utts| select_in_transcript(utts, lexicon, prior_vocab, opts))
        .collect();

    let mut out = Selection::default();
    for s in per_transcript {
        out.tokens.extend(s.tokens);
        out.exclusions.extend(s.exclusions);
    }
    out
}

fn select_in_transcript(
    utts: &[Arc<Utterance>],
    lexicon: &PronunciationLexicon,
    prior_vocab: &HashSet<String>,
    opts: &SelectOptions,
) -> Selection {
    let mut sel = Selection::default();
    for (pos, utt) in utts.iter().enumerate() {
        let sentinels = utt.gloss_tokens.iter().filter(|g| super::is_sentinel(g)).count();
        for (ti, gloss) in utt.gloss_tokens.iter().enumerate() {
            match classify(utt, ti, sentinels, lexicon, prior_vocab, opts) {
                Ok(kind) => {
                    let observed = utt.phon_tokens.as_ref().expect("checked in classify")[ti].clone();
                    sel.tokens.push(ProductionToken {
                        id: ProductionToken::make_id(&utt.transcript_id, utt.utterance_index, ti),
                        observed,
                        kind,
                        context: window_at(utts, pos, ti, opts.window),
                        age_months: utt.age_months,
                        transcript_id: utt.transcript_id.clone(),
                        utterance_index: utt.utterance_index,
                        token_index: ti,
                    });
                }
                Err(reason) => sel.exclusions.push(Exclusion {
                    transcript_id: utt.transcript_id.clone(),
                    utterance_index: utt.utterance_index,
                    token_index: ti,
                    gloss: gloss.clone(),
                    reason,
                }),
            }
        }
    }
    sel
}

fn classify(
    utt: &Utterance,
    ti: usize,
    sentinels: usize,
    lexicon: &PronunciationLexicon,
    prior_vocab: &HashSet<String>,
    opts: &SelectOptions,
) -> Result<TokenKind, ExclusionReason> {
    if utt.speaker != Speaker::Child {
        return Err(ExclusionReason::NotChild);
    }
    let Some(phon) = utt.phon_tokens.as_ref() else {
        return Err(ExclusionReason::NoPhonTier);
    };
    let gloss = utt.gloss_tokens[ti].as_str();
    if gloss == UNINTELLIGIBLE {
        return Err(ExclusionReason::Unintelligible);
    }
    match syllable_count(&phon[ti], &opts.vowels) {
        Ok(1) => {}
        Ok(_) => return Err(ExclusionReason::NotMonosyllabic),
        Err(CorpusError::NoNucleus) if opts.include_vowelless => {}
        Err(_) => return Err(ExclusionReason::NoNucleus),
    }
    if gloss == PHONOLOGY_ONLY {
        return if sentinels == 1 {
            Ok(TokenKind::Failure)
        } else {
            Err(ExclusionReason::AmbiguousFailure)
        };
    }
    if sentinels > 0 {
        return Err(ExclusionReason::ContaminatedUtterance);
    }
    if gloss.is_empty() {
        return Err(ExclusionReason::EmptyGloss);
    }
    if !prior_vocab.contains(gloss) {
        return Err(ExclusionReason::NotInPriorVocab);
    }
    if !lexicon.contains(gloss) {
        return Err(ExclusionReason::NotInLexicon);
    }
    Ok(TokenKind::Success {
        gloss: gloss.to_string(),
    })
}

fn window_at(utts: &[Arc<Utterance>], pos: usize, mask_index: usize, w: usize) -> ContextWindow {
    let lo = pos.saturating_sub(w);
    let hi = (pos + 1 + w).min(utts.len());
    ContextWindow {
        before: utts[lo..pos].to_vec(),
        after: utts[pos + 1..hi].to_vec(),
        masked_utterance: Arc::clone(&utts[pos]),
        mask_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::{tokenize_ipa, PronunciationEntry};

    fn utt(tid: &str, idx: u64, speaker: Speaker, gloss: &[&str], phon: Option<&[&str]>) -> Utterance {
        Utterance {
            transcript_id: tid.into(),
            utterance_index: idx,
            speaker,
            gloss_tokens: gloss.iter().map(|s| s.to_string()).collect(),
            phon_tokens: phon.map(|p| p.iter().map(|s| tokenize_ipa(s).unwrap()).collect()),
            age_months: Some(20.0),
        }
    }

    fn lexicon(words: &[(&str, &str)]) -> PronunciationLexicon {
        let mut lex = PronunciationLexicon::new();
        for (w, ipa) in words {
            lex.insert(PronunciationEntry {
                word: w.to_string(),
                citation: tokenize_ipa(ipa).unwrap(),
                syllables: 1,
            });
        }
        lex
    }

    fn whitelist(words: &[&str]) -> HashSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn table_one_corpus() -> Corpus {
        Corpus::new(vec![
            utt("A", 0, Speaker::Caregiver, &["this", "is"], None),
            utt(
                "A",
                1,
                Speaker::Caregiver,
                &["you", "want", "mamma", "let's", "see"],
                None,
            ),
            utt(
                "A",
                2,
                Speaker::Child,
                &["i", "want", "to", "read"],
                Some(&["ɑə", "wɑn", "də", "wid"]),
            ),
            utt("A", 3, Speaker::Caregiver, &["okay", "that's", "fine"], None),
            utt(
                "B",
                0,
                Speaker::Child,
                &["you", "make", "your", "yyy"],
                Some(&["ju", "mɛɪk", "joəɹ", "fɛt"]),
            ),
        ])
    }

    #[test]
    fn success_and_failure_from_examples() {
        let lex = lexicon(&[("read", "ɹ i d"), ("want", "w ɑ n t"), ("to", "t u"), ("i", "aɪ")]);
        let sel = select_tokens(
            &table_one_corpus(),
            &lex,
            &whitelist(&["read", "want", "to", "i"]),
            &SelectOptions::default(),
        );
        let read = sel.tokens.iter().find(|t| t.id == "A:2:3").unwrap();
        assert_eq!(read.kind, TokenKind::Success { gloss: "read".into() });
        assert_eq!(read.observed.to_spaced(), "w i d");
        assert_eq!(read.context.before.len(), 2);
        assert_eq!(read.context.after.len(), 1);

        let fail = sel.tokens.iter().find(|t| t.id == "B:0:3").unwrap();
        assert_eq!(fail.kind, TokenKind::Failure);
        // Other tokens in the failure's utterance are contaminated.
        let contaminated = sel
            .exclusions
            .iter()
            .filter(|e| e.transcript_id == "B" && e.reason == ExclusionReason::ContaminatedUtterance)
            .count();
        assert_eq!(contaminated, 3);
    }

    #[test]
    fn every_token_accounted_once() {
        let lex = lexicon(&[("read", "ɹ i d")]);
        let corpus = table_one_corpus();
        let sel = select_tokens(&corpus, &lex, &whitelist(&["read"]), &SelectOptions::default());
        let total: usize = corpus.utterances().iter().map(|u| u.gloss_tokens.len()).sum();
        assert_eq!(sel.tokens.len() + sel.exclusions.len(), total);
    }

    #[test]
    fn two_yyy_yield_no_failure() {
        let corpus = Corpus::new(vec![utt("A", 0, Speaker::Child, &["yyy", "yyy"], Some(&["bæ", "dæ"]))]);
        let sel = select_tokens(&corpus, &lexicon(&[]), &whitelist(&[]), &SelectOptions::default());
        assert!(sel.tokens.is_empty());
        assert!(sel
            .exclusions
            .iter()
            .all(|e| e.reason == ExclusionReason::AmbiguousFailure));
    }

    #[test]
    fn yyy_with_xxx_is_ambiguous() {
        let corpus = Corpus::new(vec![utt("A", 0, Speaker::Child, &["xxx", "yyy"], Some(&["bæ", "dæ"]))]);
        let sel = select_tokens(&corpus, &lexicon(&[]), &whitelist(&[]), &SelectOptions::default());
        let reasons: Vec<_> = sel.exclusions.iter().map(|e| e.reason).collect();
        assert_eq!(
            reasons,
            [ExclusionReason::Unintelligible, ExclusionReason::AmbiguousFailure]
        );
    }

    #[test]
    fn lexicon_and_whitelist_both_required() {
        let corpus = Corpus::new(vec![utt("A", 0, Speaker::Child, &["see", "go"], Some(&["si", "ɡoʊ"]))]);
        let lex = lexicon(&[("see", "s i")]);
        let sel = select_tokens(&corpus, &lex, &whitelist(&["go"]), &SelectOptions::default());
        let reasons: Vec<_> = sel.exclusions.iter().map(|e| e.reason).collect();
        assert_eq!(
            reasons,
            [ExclusionReason::NotInPriorVocab, ExclusionReason::NotInLexicon]
        );
    }

    #[test]
    fn polysyllabic_and_vowelless() {
        let corpus = Corpus::new(vec![utt(
            "A",
            0,
            Speaker::Child,
            &["baby", "shh"],
            Some(&["b eɪ b i", "ʃ"]),
        )]);
        let lex = lexicon(&[("baby", "b eɪ b i"), ("shh", "ʃ")]);
        let wl = whitelist(&["baby", "shh"]);
        let sel = select_tokens(&corpus, &lex, &wl, &SelectOptions::default());
        let reasons: Vec<_> = sel.exclusions.iter().map(|e| e.reason).collect();
        assert_eq!(reasons, [ExclusionReason::NotMonosyllabic, ExclusionReason::NoNucleus]);

        let opts = SelectOptions {
            include_vowelless: true,
            ..Default::default()
        };
        let sel = select_tokens(&corpus, &lex, &wl, &opts);
        assert_eq!(sel.tokens.len(), 1);
        assert_eq!(sel.tokens[0].kind.gloss(), Some("shh"));
    }

    #[test]
    fn windows_clip_at_transcript_edges() {
        let mut utts = Vec::new();
        for i in 0..5 {
            utts.push(utt("A", i, Speaker::Child, &["see"], Some(&["si"])));
        }
        utts.push(utt("B", 0, Speaker::Child, &["see"], Some(&["si"])));
        let corpus = Corpus::new(utts);
        let opts = SelectOptions {
            window: 2,
            ..Default::default()
        };
        let sel = select_tokens(&corpus, &lexicon(&[("see", "s i")]), &whitelist(&["see"]), &opts);
        assert_eq!(sel.tokens.len(), 6);
        for t in &sel.tokens {
            assert!(t.context.before.len() <= 2 && t.context.after.len() <= 2);
            assert!(t
                .context
                .before
                .iter()
                .chain(&t.context.after)
                .all(|u| u.transcript_id == t.transcript_id));
        }
        let last_a = sel.tokens.iter().find(|t| t.id == "A:4:0").unwrap();
        assert_eq!(last_a.context.after.len(), 0);
        let idx: Vec<u64> = last_a.context.before.iter().map(|u| u.utterance_index).collect();
        assert_eq!(idx, [2, 3]);
    }
}
