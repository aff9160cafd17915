use std::collections::BTreeSet;

use super::CorpusError;
use crate::phonology::{Phoneme, PhonemeSeq};

const SYLLABIC_BELOW: char = '\u{0329}';
const SYLLABIC_ABOVE: char = '\u{030D}';

/// IPA vowel base characters, plus a couple of common non-IPA vowel letters
/// found in transcripts.
const DEFAULT_VOWELS: &str = "iyɨʉɯuɪʏʊeøɘɵɤoəɛœɜɞʌɔæɐaɶɑɒᵻᵿɚɝ";

/// The set of base characters that make a phoneme vocalic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VowelInventory {
    bases: BTreeSet<char>,
}

impl Default for VowelInventory {
    fn default() -> Self {
        VowelInventory::from_chars(DEFAULT_VOWELS.chars())
    }
}

impl VowelInventory {
    pub fn from_chars(chars: impl IntoIterator<Item = char>) -> Self {
        VowelInventory {
            bases: chars.into_iter().collect(),
        }
    }

    /// A phoneme is vocalic if its base is a vowel or it carries a syllabic mark.
    pub fn is_vocalic(&self, p: &Phoneme) -> bool {
        self.bases.contains(&p.base()) || p.as_str().chars().any(|c| c == SYLLABIC_BELOW || c == SYLLABIC_ABOVE)
    }
}

/// Number of vocalic nuclei. A maximal run of vocalic phonemes is one nucleus.
pub fn syllable_count(seq: &PhonemeSeq, inventory: &VowelInventory) -> Result<u32, CorpusError> {
    let mut nuclei = 0;
    let mut in_run = false;
    for p in seq.segments() {
        let v = inventory.is_vocalic(p);
        if v && !in_run {
            nuclei += 1;
        }
        in_run = v;
    }
    if nuclei == 0 {
        Err(CorpusError::NoNucleus)
    } else {
        Ok(nuclei)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonology::tokenize_ipa;

    fn count(s: &str) -> Result<u32, CorpusError> {
        syllable_count(&tokenize_ipa(s).unwrap(), &VowelInventory::default())
    }

    #[test]
    fn single_vowel() {
        assert_eq!(count("w i d").unwrap(), 1);
        assert_eq!(count("f ɛ t").unwrap(), 1);
    }

    #[test]
    fn two_nuclei() {
        assert_eq!(count("b eɪ b i").unwrap(), 2);
    }

    #[test]
    fn adjacent_vowels_are_one_run() {
        assert_eq!(count("ɑ ə").unwrap(), 1);
        assert_eq!(count("ɑə").unwrap(), 1);
    }

    #[test]
    fn syllabic_consonant() {
        assert_eq!(count("b ʌ t n̩").unwrap(), 2);
    }

    #[test]
    fn no_vowel() {
        assert!(matches!(count("ʃ h"), Err(CorpusError::NoNucleus)));
    }

    #[test]
    fn custom_inventory() {
        let inv = VowelInventory::from_chars(['a']);
        let seq = tokenize_ipa("b i b a").unwrap();
        assert_eq!(syllable_count(&seq, &inv).unwrap(), 1);
    }
}
