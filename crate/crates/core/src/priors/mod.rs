//! Context-conditioned distributions over the candidate vocabulary.

mod external;
mod ngram;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::ContextWindow;
use crate::vocabulary::CandidateVocab;

pub use external::{
    validate_response, ExternalPrior, HttpTransport, PriorRequest, PriorResponse, PriorTransport, StdioTransport,
    RENORMALIZE_BAND,
};
pub use ngram::{ContextMode, NgramModel, NgramPrior, DEFAULT_BACKOFF, UTTERANCE_START};

/// Tolerance on the sum of every prior vector.
pub const SUM_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_PSEUDOCOUNT: f64 = 0.001;

#[derive(Debug, thiserror::Error)]
pub enum PriorError {
    #[error("prior provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("prior provider protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("invalid prior distribution: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorSourceKind {
    Uniform,
    Unigram,
    Ngram,
    External(String),
}

impl fmt::Display for PriorSourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSourceKind::Uniform => f.write_str("uniform"),
            PriorSourceKind::Unigram => f.write_str("unigram"),
            PriorSourceKind::Ngram => f.write_str("ngram"),
            PriorSourceKind::External(id) => write!(f, "external:{id}"),
        }
    }
}

/// A probability vector aligned to a [`CandidateVocab`].
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDistribution {
    probs: Vec<f64>,
    source: PriorSourceKind,
}

impl PriorDistribution {
    /// Checks length, sign, finiteness and normalization.
    pub fn new(probs: Vec<f64>, source: PriorSourceKind, vocab_len: usize) -> Result<Self, PriorError> {
        if probs.len() != vocab_len {
            return Err(PriorError::Invalid(format!(
                "length {} for vocabulary of {vocab_len}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(PriorError::Invalid(format!("entry {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(PriorError::Invalid(format!("sums to {sum}")));
        }
        Ok(PriorDistribution { probs, source })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn source(&self) -> &PriorSourceKind {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Anything that can produce `P(w | context)` over a vocabulary.
pub trait PriorSource: Send + Sync {
    fn kind(&self) -> PriorSourceKind;

    /// True when the prior ignores its context argument.
    fn is_context_invariant(&self) -> bool;

    fn prior(&self, ctx: &ContextWindow, vocab: &CandidateVocab) -> Result<PriorDistribution, PriorError>;
}

pub fn uniform_prior(vocab: &CandidateVocab) -> PriorDistribution {
    let n = vocab.len();
    PriorDistribution {
        probs: vec![1.0 / n as f64; n],
        source: PriorSourceKind::Uniform,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPrior;

impl PriorSource for UniformPrior {
    fn kind(&self) -> PriorSourceKind {
        PriorSourceKind::Uniform
    }

    fn is_context_invariant(&self) -> bool {
        true
    }

    fn prior(&self, _ctx: &ContextWindow, vocab: &CandidateVocab) -> Result<PriorDistribution, PriorError> {
        Ok(uniform_prior(vocab))
    }
}

/// Add-pseudocount unigram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    pub counts: HashMap<String, f64>,
    pub pseudocount: f64,
}

impl UnigramModel {
    pub fn new(counts: HashMap<String, f64>, pseudocount: f64) -> Self {
        assert!(pseudocount > 0.0, "pseudocount must be positive");
        UnigramModel { counts, pseudocount }
    }

    pub fn from_counts(counts: &BTreeMap<String, u64>) -> Self {
        Self::new(
            counts.iter().map(|(w, c)| (w.clone(), *c as f64)).collect(),
            DEFAULT_PSEUDOCOUNT,
        )
    }

    pub fn count(&self, word: &str) -> f64 {
        self.counts.get(word).copied().unwrap_or(0.0)
    }
}

/// `(count(w) + k) / Σ_{v∈V} (count(v) + k)`; the same vector for every context.
pub fn unigram_prior(model: &UnigramModel, vocab: &CandidateVocab) -> PriorDistribution {
    let weights: Vec<f64> = vocab.words().map(|w| model.count(w) + model.pseudocount).collect();
    let total: f64 = weights.iter().sum();
    // Equal weights give exactly 1/|V|, matching the uniform prior bit for bit.
    let probs = if weights.iter().all(|w| *w == weights[0]) {
        vec![1.0 / weights.len() as f64; weights.len()]
    } else {
        weights.iter().map(|w| w / total).collect()
    };
    PriorDistribution {
        probs,
        source: PriorSourceKind::Unigram,
    }
}

#[derive(Debug, Clone)]
pub struct UnigramPrior {
    pub model: UnigramModel,
}

impl PriorSource for UnigramPrior {
    fn kind(&self) -> PriorSourceKind {
        PriorSourceKind::Unigram
    }

    fn is_context_invariant(&self) -> bool {
        true
    }

    fn prior(&self, _ctx: &ContextWindow, vocab: &CandidateVocab) -> Result<PriorDistribution, PriorError> {
        Ok(unigram_prior(&self.model, vocab))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::entropy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn vocab(words: &[&str]) -> CandidateVocab {
        let pairs: Vec<(&str, &str)> = words.iter().map(|w| (*w, "a")).collect();
        CandidateVocab::from_pairs(&pairs).unwrap()
    }

    fn counts(pairs: &[(&str, f64)]) -> UnigramModel {
        UnigramModel::new(
            pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
            DEFAULT_PSEUDOCOUNT,
        )
    }

    #[test]
    fn uniform_values() {
        assert_eq!(uniform_prior(&vocab(&["a", "b", "c", "d"])).probs(), [0.25; 4]);
        assert_eq!(uniform_prior(&vocab(&["a"])).probs(), [1.0]);
    }

    #[test]
    fn unigram_symmetric() {
        let p = unigram_prior(&counts(&[("a", 1.0), ("b", 1.0)]), &vocab(&["a", "b"]));
        assert_eq!(p.probs(), [0.5, 0.5]);
    }

    #[test]
    fn unigram_skewed() {
        // (3 + .001) / 4.002 and (1 + .001) / 4.002
        let p = unigram_prior(&counts(&[("a", 3.0), ("b", 1.0)]), &vocab(&["a", "b"]));
        assert_abs_diff_eq!(p.probs()[0], 3.001 / 4.002, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[0], 0.74988, epsilon = 1e-5);
        assert_abs_diff_eq!(p.probs()[1], 0.25012, epsilon = 1e-5);
    }

    #[test]
    fn unigram_without_counts_is_uniform() {
        let v = vocab(&["a", "b", "c"]);
        let p = unigram_prior(&counts(&[]), &v);
        assert_eq!(p.probs(), uniform_prior(&v).probs());
    }

    #[test]
    fn distribution_validation() {
        assert!(PriorDistribution::new(vec![0.5, 0.5], PriorSourceKind::Uniform, 2).is_ok());
        assert!(PriorDistribution::new(vec![0.5], PriorSourceKind::Uniform, 2).is_err());
        assert!(PriorDistribution::new(vec![0.6, 0.5], PriorSourceKind::Uniform, 2).is_err());
        assert!(PriorDistribution::new(vec![1.5, -0.5], PriorSourceKind::Uniform, 2).is_err());
        assert!(PriorDistribution::new(vec![f64::NAN, 1.0], PriorSourceKind::Uniform, 2).is_err());
    }

    proptest! {
        #[test]
        fn unigram_entropy_bounded(cs in prop::collection::vec(0u32..50, 2..30)) {
            let words: Vec<String> = (0..cs.len()).map(|i| format!("w{i:02}")).collect();
            let refs: Vec<&str> = words.iter().map(String::as_str).collect();
            let v = vocab(&refs);
            let model = UnigramModel::new(
                words.iter().zip(&cs).map(|(w, c)| (w.clone(), *c as f64)).collect(),
                DEFAULT_PSEUDOCOUNT,
            );
            let p = unigram_prior(&model, &v);
            let sum: f64 = p.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() < SUM_TOLERANCE);
            let h = entropy(p.probs());
            let max = (v.len() as f64).log2();
            prop_assert!(h <= max + 1e-12);
            if cs.iter().all(|c| *c == cs[0]) {
                prop_assert!((h - max).abs() < 1e-12);
            } else {
                prop_assert!(h < max);
            }
        }
    }
}
