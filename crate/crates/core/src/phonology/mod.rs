//! IPA tokenization, pronunciation lexicons and phoneme edit distance.

mod distance;
mod ipa;
mod lexicon;

pub use distance::{edit_distance, levenshtein};
pub use ipa::{tokenize_ipa, Phoneme, PhonemeSeq, FOLD_TABLE_VERSION};
pub use lexicon::{load_lexicon, PronunciationEntry, PronunciationLexicon, LEXICON_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum PhonologyError {
    #[error("no phonemes remain after stripping")]
    EmptySequence,
    #[error("invalid phoneme symbol {0:?}")]
    InvalidPhoneme(String),
    #[error("lexicon format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for PhonologyError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::EmptySequence, Self::EmptySequence) => true,
            (Self::InvalidPhoneme(a), Self::InvalidPhoneme(b)) => a == b,
            (Self::Format(a), Self::Format(b)) => a == b,
            _ => false,
        }
    }
}
