//! The candidate inventory that every prior, likelihood and posterior is
//! defined over.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, Write};

use crate::corpus::{is_sentinel, Corpus};
use crate::phonology::{PhonemeSeq, PronunciationLexicon};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("candidate vocabulary is empty")]
    EmptyVocab,
    #[error("duplicate candidate word {0:?}")]
    DuplicateWord(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub citation: PhonemeSeq,
    pub syllables: u32,
    /// Corpus gloss count that admitted the word; zero when built by hand.
    pub count: u64,
}

/// Candidate words in lexicographic order, with a word → position index.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateVocab {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl CandidateVocab {
    /// Sorts entries by word. Duplicate words are an error.
    pub fn from_entries(mut entries: Vec<VocabEntry>) -> Result<Self, VocabError> {
        if entries.is_empty() {
            return Err(VocabError::EmptyVocab);
        }
        entries.sort_by(|a, b| a.word.cmp(&b.word));
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.word.clone(), i).is_some() {
                return Err(VocabError::DuplicateWord(e.word.clone()));
            }
        }
        Ok(CandidateVocab { entries, index })
    }

    /// Convenience for tests and examples: `(word, ipa)` pairs, one syllable each.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Result<Self, VocabError> {
        let entries = pairs
            .iter()
            .map(|(w, ipa)| VocabEntry {
                word: w.to_string(),
                citation: crate::phonology::tokenize_ipa(ipa).expect("valid IPA"),
                syllables: 1,
                count: 0,
            })
            .collect();
        Self::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn word(&self, i: usize) -> &str {
        &self.entries[i].word
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    /// `word<TAB>ipa<TAB>syllables<TAB>count` with a header row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "word\tipa\tsyllables\tcount")?;
        for e in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                e.word,
                e.citation.to_spaced(),
                e.syllables,
                e.count
            )?;
        }
        Ok(())
    }
}

/// Gloss token counts over all speakers, skipping `xxx`/`yyy` and empty glosses.
pub fn count_glosses(corpus: &Corpus) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for utt in corpus.utterances() {
        for g in &utt.gloss_tokens {
            if g.is_empty() || is_sentinel(g) {
                continue;
            }
            *counts.entry(g.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Lexicon words of one or two syllables that are in the prior whitelist and
/// occur at least `min_count` times in the corpus.
pub fn build_vocab(
    lexicon: &PronunciationLexicon,
    corpus: &Corpus,
    prior_vocab: &HashSet<String>,
    min_count: u64,
) -> Result<CandidateVocab, VocabError> {
    build_vocab_from_counts(lexicon, &count_glosses(corpus), prior_vocab, min_count)
}

pub fn build_vocab_from_counts(
    lexicon: &PronunciationLexicon,
    counts: &BTreeMap<String, u64>,
    prior_vocab: &HashSet<String>,
    min_count: u64,
) -> Result<CandidateVocab, VocabError> {
    let entries: Vec<VocabEntry> = lexicon
        .iter()
        .filter(|e| (1..=2).contains(&e.syllables))
        .filter(|e| prior_vocab.contains(&e.word))
        .filter_map(|e| {
            let count = counts.get(&e.word).copied().unwrap_or(0);
            (count >= min_count).then(|| VocabEntry {
                word: e.word.clone(),
                citation: e.citation.clone(),
                syllables: e.syllables,
                count,
            })
        })
        .collect();
    CandidateVocab::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Speaker, Utterance};
    use crate::phonology::{tokenize_ipa, PronunciationEntry};

    fn utt(idx: u64, gloss: &[&str]) -> Utterance {
        Utterance {
            transcript_id: "t".into(),
            utterance_index: idx,
            speaker: if idx.is_multiple_of(2) {
                Speaker::Child
            } else {
                Speaker::Caregiver
            },
            gloss_tokens: gloss.iter().map(|s| s.to_string()).collect(),
            phon_tokens: None,
            age_months: None,
        }
    }

    fn lex(words: &[(&str, &str, u32)]) -> PronunciationLexicon {
        let mut l = PronunciationLexicon::new();
        for (w, ipa, syl) in words {
            l.insert(PronunciationEntry {
                word: w.to_string(),
                citation: tokenize_ipa(ipa).unwrap(),
                syllables: *syl,
            });
        }
        l
    }

    fn toy_corpus(counts: &[(&str, usize)]) -> Corpus {
        let mut utts = Vec::new();
        let mut idx = 0;
        for (w, n) in counts {
            for _ in 0..*n {
                utts.push(utt(idx, &[w]));
                idx += 1;
            }
        }
        Corpus::new(utts)
    }

    #[test]
    fn counts() {
        assert!(count_glosses(&Corpus::default()).is_empty());
        let c = count_glosses(&Corpus::new(vec![utt(0, &["you", "make", "your"])]));
        assert_eq!(c.len(), 3);
        assert!(c.values().all(|&n| n == 1));
        let c = count_glosses(&Corpus::new(vec![utt(0, &["see", "yyy"]), utt(1, &["see", "xxx"])]));
        assert_eq!(c["see"], 2);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn toy_intersection() {
        let lexicon = lex(&[
            ("see", "s i", 1),
            ("read", "ɹ i d", 1),
            ("weed", "w i d", 1),
            ("banana", "b ə n æ n ə", 3),
        ]);
        let corpus = toy_corpus(&[("see", 5), ("read", 4), ("weed", 3), ("banana", 9)]);
        let wl: HashSet<String> = ["see", "read", "weed", "banana"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let v = build_vocab(&lexicon, &corpus, &wl, 3).unwrap();
        assert_eq!(v.words().collect::<Vec<_>>(), ["read", "see", "weed"]);
        assert_eq!(v.index_of("see"), Some(1));
        assert_eq!(v.entries()[2].count, 3);

        // Raising the threshold drops weed.
        let v4 = build_vocab(&lexicon, &corpus, &wl, 4).unwrap();
        assert_eq!(v4.words().collect::<Vec<_>>(), ["read", "see"]);
    }

    #[test]
    fn whitelist_and_threshold_exclude() {
        let lexicon = lex(&[("see", "s i", 1), ("go", "ɡ oʊ", 1), ("baby", "b eɪ b i", 2)]);
        let corpus = toy_corpus(&[("see", 2), ("go", 3), ("baby", 3)]);
        let wl: HashSet<String> = ["see", "baby"].iter().map(|s| s.to_string()).collect();
        let v = build_vocab(&lexicon, &corpus, &wl, 3).unwrap();
        assert_eq!(v.words().collect::<Vec<_>>(), ["baby"]);
    }

    #[test]
    fn empty_is_error() {
        let lexicon = lex(&[("see", "s i", 1)]);
        let wl = HashSet::new();
        assert_eq!(
            build_vocab(&lexicon, &Corpus::default(), &wl, 3),
            Err(VocabError::EmptyVocab)
        );
    }

    #[test]
    fn duplicate_entries_rejected() {
        assert_eq!(
            CandidateVocab::from_pairs(&[("a", "a"), ("a", "e")]),
            Err(VocabError::DuplicateWord("a".into()))
        );
    }

    #[test]
    fn tsv_output() {
        let v = CandidateVocab::from_pairs(&[("see", "s i"), ("go", "ɡ oʊ")]).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "word\tipa\tsyllables\tcount\ngo\tɡ oʊ\t1\t0\nsee\ts i\t1\t0\n"
        );
    }
}
