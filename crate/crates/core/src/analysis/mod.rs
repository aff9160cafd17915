//! Corpus-level analyses over scored tokens: surprisal comparisons between
//! priors, failure prediction from posterior entropy, and information gain
//! relative to a uniform baseline over developmental age.

mod infogain;
mod roc;
mod surprisal;

pub use infogain::{information_gain_by_age, Condition, GainObservation, InfoGainRecord, InfoGainReport};
pub use roc::{mann_whitney_auc, roc_failures, RocCurve, RocPoint};
pub use surprisal::{surprisal_report, DistanceBinSummary, DistanceBins, ModelSummary, PairedTest, SurprisalReport};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("distributions differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("q is zero at index {0} where p is positive")]
    SupportViolation(usize),
    #[error("{0} class is empty")]
    EmptyClass(&'static str),
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("models scored different token sets: {0}")]
    TokenSetMismatch(String),
    #[error("no models to report")]
    NoModels,
}

/// `KL(p ‖ q)` in bits, `Σ p log2(p / q)` with `0 · log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, AnalysisError> {
    if p.len() != q.len() {
        return Err(AnalysisError::LengthMismatch(p.len(), q.len()));
    }
    let mut sum = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(AnalysisError::SupportViolation(i));
            }
            sum += pi * (pi / qi).log2();
        }
    }
    Ok(sum.max(0.0))
}

/// Information gain of `p` over the uniform distribution on `n` outcomes,
/// `log2 n - H(p)`, from an already computed entropy.
pub fn gain_over_uniform(entropy_bits: f64, n: usize) -> f64 {
    ((n as f64).log2() - entropy_bits).max(0.0)
}
