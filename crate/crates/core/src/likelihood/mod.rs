//! Perceptual fit: `P(d | w) ∝ exp(-β · dist(citation(w), d))`.
//!
//! Weights are left unnormalized over the data space; the posterior normalizes
//! over the vocabulary.

mod calibrate;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::phonology::{edit_distance, PhonemeSeq};
use crate::vocabulary::CandidateVocab;

pub use calibrate::{
    calibrate_beta, CalibrationError, CalibrationObjective, CalibrationOptions, CalibrationResult, DEFAULT_SAMPLE_SIZE,
};

/// Noise scale picked by the reference calibration.
pub const DEFAULT_BETA: f64 = 3.2;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LikelihoodError {
    #[error("beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error("invalid grid lo={lo} hi={hi} step={step}")]
    BadGrid { lo: f64, hi: f64, step: f64 },
}

/// Inclusive grid of candidate β values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for BetaGrid {
    fn default() -> Self {
        BetaGrid {
            lo: 1.0,
            hi: 6.0,
            step: 0.1,
        }
    }
}

impl BetaGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, LikelihoodError> {
        let ok = lo.is_finite() && hi.is_finite() && step.is_finite() && lo > 0.0 && lo < hi && step > 0.0;
        if !ok {
            return Err(LikelihoodError::BadGrid { lo, hi, step });
        }
        Ok(BetaGrid { lo, hi, step })
    }

    /// Grid points from `lo` to `hi` inclusive, rounded to 1e-9 so that e.g.
    /// `1.0 + 22 × 0.1` prints as `3.2`.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodConfig {
    pub beta: f64,
    pub grid: BetaGrid,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        LikelihoodConfig {
            beta: DEFAULT_BETA,
            grid: BetaGrid::default(),
        }
    }
}

impl LikelihoodConfig {
    pub fn with_beta(beta: f64) -> Result<Self, LikelihoodError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(LikelihoodError::BadBeta(beta));
        }
        Ok(LikelihoodConfig {
            beta,
            ..Default::default()
        })
    }
}

/// Unnormalized likelihoods aligned to a vocabulary, with the distances behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodVector {
    beta: f64,
    distances: Arc<Vec<u32>>,
    weights: Vec<f64>,
}

impl LikelihoodVector {
    pub fn from_distances(distances: Arc<Vec<u32>>, beta: f64) -> Self {
        let weights = distances.iter().map(|d| (-beta * *d as f64).exp()).collect();
        LikelihoodVector {
            beta,
            distances,
            weights,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    /// `-β · dist`, exact in log space even where the weight underflows.
    pub fn ln_weights(&self) -> Vec<f64> {
        self.distances.iter().map(|d| -self.beta * *d as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Edit distance from `observed` to every citation form, in vocabulary order.
pub fn distances(observed: &PhonemeSeq, vocab: &CandidateVocab) -> Vec<u32> {
    vocab
        .entries()
        .iter()
        .map(|e| edit_distance(&e.citation, observed))
        .collect()
}

/// Memoized distance vectors for one vocabulary, keyed by observed sequence.
#[derive(Debug, Default)]
pub struct DistanceCache {
    map: RwLock<HashMap<PhonemeSeq, Arc<Vec<u32>>>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, observed: &PhonemeSeq, vocab: &CandidateVocab) -> Arc<Vec<u32>> {
        if let Some(hit) = self.map.read().unwrap_or_else(|p| p.into_inner()).get(observed) {
            return Arc::clone(hit);
        }
        let computed = Arc::new(distances(observed, vocab));
        let mut map = self.map.write().unwrap_or_else(|p| p.into_inner());
        // first writer wins
        Arc::clone(map.entry(observed.clone()).or_insert(computed))
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn likelihood_vector(observed: &PhonemeSeq, vocab: &CandidateVocab, cfg: &LikelihoodConfig) -> LikelihoodVector {
    LikelihoodVector::from_distances(Arc::new(distances(observed, vocab)), cfg.beta)
}

pub fn likelihood_vector_cached(
    observed: &PhonemeSeq,
    vocab: &CandidateVocab,
    cfg: &LikelihoodConfig,
    cache: &DistanceCache,
) -> LikelihoodVector {
    LikelihoodVector::from_distances(cache.get_or_compute(observed, vocab), cfg.beta)
}
