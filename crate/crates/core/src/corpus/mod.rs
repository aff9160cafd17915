//! Transcript ingestion and selection of communicative successes and failures.

mod load;
mod select;
mod syllable;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::phonology::{PhonemeSeq, PhonologyError};

pub use load::{load_corpus, Corpus};
pub use select::{select_tokens, Exclusion, ExclusionReason, SelectOptions, Selection};
pub use syllable::{syllable_count, VowelInventory};

/// Gloss for a token the transcriber could not make out at all.
pub const UNINTELLIGIBLE: &str = "xxx";
/// Gloss for a token with phonology but no recovered word.
pub const PHONOLOGY_ONLY: &str = "yyy";
/// Literal placed at the masked position in prior requests.
pub const MASK_TOKEN: &str = "<mask>";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("sequence has no vocalic nucleus")]
    NoNucleus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Phonology(#[from] PhonologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    Child,
    Caregiver,
    Other,
}

impl Speaker {
    /// Maps a CHAT-style speaker code.
    pub fn from_code(code: &str) -> Self {
        match code {
            "CHI" => Speaker::Child,
            "MOT" | "FAT" => Speaker::Caregiver,
            _ => Speaker::Other,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Speaker::Child => "CHI",
            Speaker::Caregiver => "MOT",
            Speaker::Other => "OTH",
        }
    }
}

/// One transcribed utterance. Gloss tokens are stored normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub transcript_id: String,
    pub utterance_index: u64,
    pub speaker: Speaker,
    pub gloss_tokens: Vec<String>,
    /// Aligned one-to-one with `gloss_tokens` when present.
    pub phon_tokens: Option<Vec<PhonemeSeq>>,
    pub age_months: Option<f64>,
}

impl Utterance {
    pub fn has_sentinel(&self) -> bool {
        self.gloss_tokens.iter().any(|g| is_sentinel(g))
    }
}

pub fn is_sentinel(gloss: &str) -> bool {
    gloss == UNINTELLIGIBLE || gloss == PHONOLOGY_ONLY
}

/// Lowercases and trims punctuation at either edge, keeping word-internal
/// apostrophes and hyphens (`that's`, `uh-oh`).
pub fn normalize_gloss(raw: &str) -> String {
    raw.trim().trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

/// Discourse around a masked token, clipped at transcript edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextWindow {
    pub before: Vec<Arc<Utterance>>,
    pub after: Vec<Arc<Utterance>>,
    pub masked_utterance: Arc<Utterance>,
    pub mask_index: usize,
}

impl ContextWindow {
    /// A window with no surrounding utterances.
    pub fn single(masked_utterance: Arc<Utterance>, mask_index: usize) -> Self {
        ContextWindow {
            before: Vec::new(),
            after: Vec::new(),
            masked_utterance,
            mask_index,
        }
    }

    /// The masked utterance's glosses with the target replaced by [`MASK_TOKEN`].
    pub fn masked_gloss(&self) -> Vec<String> {
        let mut gloss = self.masked_utterance.gloss_tokens.clone();
        if let Some(slot) = gloss.get_mut(self.mask_index) {
            *slot = MASK_TOKEN.to_string();
        }
        gloss
    }

    /// Glosses to the left of the mask within its own utterance.
    pub fn left_of_mask(&self) -> &[String] {
        let end = self.mask_index.min(self.masked_utterance.gloss_tokens.len());
        &self.masked_utterance.gloss_tokens[..end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Success { gloss: String },
    Failure,
}

impl TokenKind {
    pub fn label(&self) -> &'static str {
        match self {
            TokenKind::Success { .. } => "success",
            TokenKind::Failure => "failure",
        }
    }

    pub fn gloss(&self) -> Option<&str> {
        match self {
            TokenKind::Success { gloss } => Some(gloss),
            TokenKind::Failure => None,
        }
    }
}

/// A selected child production with its masked context.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionToken {
    pub id: String,
    pub observed: PhonemeSeq,
    pub kind: TokenKind,
    pub context: ContextWindow,
    pub age_months: Option<f64>,
    pub transcript_id: String,
    pub utterance_index: u64,
    pub token_index: usize,
}

impl ProductionToken {
    pub fn is_success(&self) -> bool {
        matches!(self.kind, TokenKind::Success { .. })
    }

    pub fn make_id(transcript_id: &str, utterance_index: u64, token_index: usize) -> String {
        format!("{transcript_id}:{utterance_index}:{token_index}")
    }
}
