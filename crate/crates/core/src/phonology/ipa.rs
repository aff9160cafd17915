//! IPA segments and tokenization.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::PhonologyError;

const FOLD_TABLE_SRC: &str = include_str!("../../data/ipa_fold_v1.tsv");

/// Version tag of the bundled fold table, recorded in run manifests.
pub const FOLD_TABLE_VERSION: &str = "ipa_fold_v1";

const PRIMARY_STRESS: char = '\u{02C8}';
const SECONDARY_STRESS: char = '\u{02CC}';
const SYLLABLE_BREAK: char = '.';
const TIE_BELOW: char = '\u{035C}';
const TIE_ABOVE: char = '\u{0361}';

/// One IPA segment: a base character plus any attached diacritics.
///
/// Stored in NFC. Two phonemes are equal iff their NFC strings are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Phoneme(String);

impl Phoneme {
    pub fn new(symbol: &str) -> Result<Self, PhonologyError> {
        if symbol.is_empty() {
            return Err(PhonologyError::InvalidPhoneme(symbol.to_string()));
        }
        if symbol.chars().any(char::is_whitespace) {
            return Err(PhonologyError::InvalidPhoneme(symbol.to_string()));
        }
        Ok(Phoneme(symbol.nfc().collect()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The first non-diacritic character of the segment.
    pub fn base(&self) -> char {
        self.0
            .chars()
            .find(|c| !is_attachment(*c))
            .unwrap_or_else(|| self.0.chars().next().expect("phoneme is non-empty"))
    }
}

impl TryFrom<String> for Phoneme {
    type Error = PhonologyError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Phoneme::new(&value)
    }
}

impl From<Phoneme> for String {
    fn from(p: Phoneme) -> String {
        p.0
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A non-empty ordered sequence of phonemes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Phoneme>", into = "Vec<Phoneme>")]
pub struct PhonemeSeq(Vec<Phoneme>);

impl PhonemeSeq {
    pub fn new(segments: Vec<Phoneme>) -> Result<Self, PhonologyError> {
        if segments.is_empty() {
            return Err(PhonologyError::EmptySequence);
        }
        Ok(PhonemeSeq(segments))
    }

    /// Builds a sequence from already-segmented symbols, e.g. `["w", "i", "d"]`.
    pub fn from_symbols<S: AsRef<str>>(symbols: &[S]) -> Result<Self, PhonologyError> {
        let segments = symbols
            .iter()
            .map(|s| Phoneme::new(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        PhonemeSeq::new(segments)
    }

    pub fn segments(&self) -> &[Phoneme] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Space-joined rendering, the form used in lexicon and vocabulary files.
    pub fn to_spaced(&self) -> String {
        self.0.iter().map(Phoneme::as_str).collect::<Vec<_>>().join(" ")
    }
}

impl TryFrom<Vec<Phoneme>> for PhonemeSeq {
    type Error = PhonologyError;
    fn try_from(value: Vec<Phoneme>) -> Result<Self, Self::Error> {
        PhonemeSeq::new(value)
    }
}

impl From<PhonemeSeq> for Vec<Phoneme> {
    fn from(s: PhonemeSeq) -> Vec<Phoneme> {
        s.0
    }
}

impl fmt::Display for PhonemeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/", self.to_spaced())
    }
}

fn fold_table() -> &'static HashMap<char, String> {
    static TABLE: OnceLock<HashMap<char, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        FOLD_TABLE_SRC
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| {
                let mut cols = l.split('\t');
                let from = cols.next()?;
                let to = cols.next().unwrap_or("");
                let mut chars = from.chars();
                let c = chars.next()?;
                // keys are single characters
                if chars.next().is_some() {
                    return None;
                }
                Some((c, to.nfc().collect()))
            })
            .collect()
    })
}

/// Characters that attach to the preceding base character.
fn is_attachment(c: char) -> bool {
    is_combining_mark(c)
        || matches!(c, '\u{02B0}'..='\u{02FF}')
        || matches!(c, '\u{1D2C}'..='\u{1D6A}')
        || matches!(c, '\u{2070}'..='\u{209F}')
}

fn is_tie(c: char) -> bool {
    c == TIE_ABOVE || c == TIE_BELOW
}

fn is_stripped(c: char) -> bool {
    c == PRIMARY_STRESS || c == SECONDARY_STRESS || c == SYLLABLE_BREAK
}

/// NFC, fold table, then removal of stress and syllable marks.
fn prepare(raw: &str) -> String {
    let folded: String = raw
        .nfc()
        .flat_map(|c| match fold_table().get(&c) {
            Some(to) => to.chars().collect::<Vec<_>>(),
            None => vec![c],
        })
        .filter(|c| !is_stripped(*c))
        .collect();
    folded.nfc().collect()
}

/// Canonical form of a finished segment: tie bars dropped once they have done
/// their joining work, so `t͡ʃ` and a whitespace-delimited `tʃ` compare equal.
fn finish_segment(seg: &str) -> Option<Phoneme> {
    let s: String = seg.chars().filter(|c| !is_tie(*c)).collect();
    if s.is_empty() {
        None
    } else {
        Phoneme::new(&s).ok()
    }
}

fn segment_greedy(text: &str) -> Vec<Phoneme> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut joining = false;
    for c in text.chars() {
        if is_tie(c) {
            current.push(c);
            joining = true;
        } else if is_attachment(c) {
            current.push(c);
        } else if joining {
            current.push(c);
            joining = false;
        } else {
            if let Some(p) = finish_segment(&current) {
                out.push(p);
            }
            current.clear();
            current.push(c);
        }
    }
    if let Some(p) = finish_segment(&current) {
        out.push(p);
    }
    out
}

/// Splits an IPA transcription into phonemes.
///
/// Whitespace-delimited input is taken token by token. Otherwise the string is
/// segmented greedily: each base character starts a segment and combining
/// diacritics, modifier letters, length marks and tie bars attach to it. Stress
/// marks and syllable dots are removed in both modes.
pub fn tokenize_ipa(raw: &str) -> Result<PhonemeSeq, PhonologyError> {
    let prepared = prepare(raw);
    let segments: Vec<Phoneme> = if prepared.chars().any(char::is_whitespace) {
        prepared.split_whitespace().filter_map(finish_segment).collect()
    } else {
        segment_greedy(&prepared)
    };
    PhonemeSeq::new(segments)
}
