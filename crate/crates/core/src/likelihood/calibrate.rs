//! Grid search for the likelihood noise scale β.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{BetaGrid, DistanceCache};
use crate::corpus::{ProductionToken, TokenKind};
use crate::posterior::log_sum_exp;
use crate::priors::PriorSource;
use crate::vocabulary::CandidateVocab;

pub const DEFAULT_SAMPLE_SIZE: usize = 1000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CalibrationError {
    #[error("no scorable communicative successes to calibrate on")]
    NoSuccesses,
    #[error("token {0} is not a communicative success")]
    NotASuccess(String),
    #[error("no prior sources given")]
    NoPriors,
}

/// How per-token posterior probabilities of the gloss are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationObjective {
    /// `exp(mean ln p)`: the probability of the whole sample, per token.
    GeometricMean,
    /// `mean p`.
    ArithmeticMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub grid: BetaGrid,
    pub sample_size: usize,
    pub seed: u64,
    pub objective: CalibrationObjective,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            grid: BetaGrid::default(),
            sample_size: DEFAULT_SAMPLE_SIZE,
            seed: 0,
            objective: CalibrationObjective::GeometricMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub best_beta: f64,
    /// `(beta, objective)` for every grid point, ascending in β.
    pub curve: Vec<(f64, f64)>,
    /// Tokens actually evaluated, per prior source.
    pub sample_size: usize,
    /// Sampled tokens dropped because a prior could not be obtained.
    pub skipped: usize,
    pub seed: u64,
}

impl CalibrationResult {
    /// `beta,mean_posterior_prob` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,mean_posterior_prob\n");
        for (b, v) in &self.curve {
            out.push_str(&format!("{b},{v}\n"));
        }
        out
    }
}

struct Evaluable {
    ln_prior: Vec<f64>,
    distances: Vec<f64>,
    gloss: usize,
}

/// Picks the grid β that maximizes the pooled posterior probability of the
/// gloss over a seeded sample of successes.
///
/// With several prior sources the objective pools over every (source, token)
/// pair, fitting one β across models. Ties go to the smaller β.
pub fn calibrate_beta(
    successes: &[ProductionToken],
    priors: &[&dyn PriorSource],
    vocab: &CandidateVocab,
    opts: &CalibrationOptions,
    cache: Option<&DistanceCache>,
) -> Result<CalibrationResult, CalibrationError> {
    if priors.is_empty() {
        return Err(CalibrationError::NoPriors);
    }
    let mut candidates: Vec<(&ProductionToken, usize)> = Vec::new();
    for t in successes {
        match &t.kind {
            TokenKind::Success { gloss } => {
                if let Some(i) = vocab.index_of(gloss) {
                    candidates.push((t, i));
                }
            }
            TokenKind::Failure => return Err(CalibrationError::NotASuccess(t.id.clone())),
        }
    }
    if candidates.is_empty() {
        return Err(CalibrationError::NoSuccesses);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    candidates.shuffle(&mut rng);
    candidates.truncate(opts.sample_size.max(1));

    let local_cache;
    let cache = match cache {
        Some(c) => c,
        None => {
            local_cache = DistanceCache::new();
            &local_cache
        }
    };

    let mut items = Vec::with_capacity(candidates.len() * priors.len());
    let mut skipped = 0;
    for source in priors {
        for (tok, gloss) in &candidates {
            let prior = match source.prior(&tok.context, vocab) {
                Ok(p) => p,
                Err(e) => {
                    warn!(token = %tok.id, error = %e, "calibration token skipped");
                    skipped += 1;
                    continue;
                }
            };
            let distances = cache.get_or_compute(&tok.observed, vocab);
            items.push(Evaluable {
                ln_prior: prior.probs().iter().map(|p| p.ln()).collect(),
                distances: distances.iter().map(|d| *d as f64).collect(),
                gloss: *gloss,
            });
        }
    }
    if items.is_empty() {
        return Err(CalibrationError::NoSuccesses);
    }

    let grid = opts.grid.values();
    let curve: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&beta| (beta, objective(&items, beta, opts.objective)))
        .collect();

    let mut best = curve[0];
    for &(b, v) in &curve[1..] {
        if v > best.1 {
            best = (b, v);
        }
    }
    Ok(CalibrationResult {
        best_beta: best.0,
        curve,
        sample_size: candidates.len(),
        skipped,
        seed: opts.seed,
    })
}

fn objective(items: &[Evaluable], beta: f64, kind: CalibrationObjective) -> f64 {
    let mut joint = Vec::new();
    let ln_probs = items.iter().map(|it| {
        joint.clear();
        joint.extend(it.ln_prior.iter().zip(&it.distances).map(|(p, d)| p - beta * d));
        let z = log_sum_exp(&joint);
        joint[it.gloss] - z
    });
    let n = items.len() as f64;
    match kind {
        CalibrationObjective::GeometricMean => (ln_probs.sum::<f64>() / n).exp(),
        CalibrationObjective::ArithmeticMean => ln_probs.map(f64::exp).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::{ContextWindow, Speaker, Utterance};
    use crate::phonology::tokenize_ipa;
    use crate::priors::UniformPrior;

    fn token(id: usize, gloss: &str, observed: &str) -> ProductionToken {
        let utt = Arc::new(Utterance {
            transcript_id: "t".into(),
            utterance_index: id as u64,
            speaker: Speaker::Child,
            gloss_tokens: vec![gloss.into()],
            phon_tokens: None,
            age_months: None,
        });
        ProductionToken {
            id: format!("t:{id}:0"),
            observed: tokenize_ipa(observed).unwrap(),
            kind: TokenKind::Success { gloss: gloss.into() },
            context: ContextWindow::single(utt, 0),
            age_months: None,
            transcript_id: "t".into(),
            utterance_index: id as u64,
            token_index: 0,
        }
    }

    fn toy_vocab() -> CandidateVocab {
        CandidateVocab::from_pairs(&[("read", "ɹ i d"), ("weed", "w i d"), ("see", "s i")]).unwrap()
    }

    #[test]
    fn exact_productions_push_beta_to_the_top() {
        let v = toy_vocab();
        let toks = vec![
            token(0, "read", "ɹ i d"),
            token(1, "weed", "w i d"),
            token(2, "see", "s i"),
        ];
        let res = calibrate_beta(&toks, &[&UniformPrior], &v, &CalibrationOptions::default(), None).unwrap();
        assert_eq!(res.curve.len(), 51);
        // Direct sweep: p(gloss) = 1 / (1 + Σ_{other} e^{-β d}) grows with β.
        for w in res.curve.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        assert_eq!(res.best_beta, 6.0);
        let beta = 6.0f64;
        // read vs weed 1 edit, read vs see 2 edits; weed vs see 2; see vs both 2
        let p_read = 1.0 / (1.0 + (-beta).exp() + (-2.0 * beta).exp());
        let p_see = 1.0 / (1.0 + 2.0 * (-2.0 * beta).exp());
        let expected = (p_read * p_read * p_see).powf(1.0 / 3.0);
        assert!((res.curve[50].1 - expected).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smaller_beta() {
        // A lone candidate: posterior is 1 for every β.
        let v = CandidateVocab::from_pairs(&[("see", "s i")]).unwrap();
        let res = calibrate_beta(
            &[token(0, "see", "s ɪ")],
            &[&UniformPrior],
            &v,
            &CalibrationOptions::default(),
            None,
        )
        .unwrap();
        assert_eq!(res.best_beta, 1.0);
    }

    #[test]
    fn rejects_failures_and_empty_samples() {
        let v = toy_vocab();
        let mut f = token(0, "read", "w i d");
        f.kind = TokenKind::Failure;
        assert_eq!(
            calibrate_beta(&[f], &[&UniformPrior], &v, &CalibrationOptions::default(), None),
            Err(CalibrationError::NotASuccess("t:0:0".into()))
        );
        assert_eq!(
            calibrate_beta(&[], &[&UniformPrior], &v, &CalibrationOptions::default(), None),
            Err(CalibrationError::NoSuccesses)
        );
        assert_eq!(
            calibrate_beta(
                &[token(0, "banana", "b æ")],
                &[&UniformPrior],
                &v,
                &CalibrationOptions::default(),
                None
            ),
            Err(CalibrationError::NoSuccesses)
        );
    }

    #[test]
    fn sample_is_seeded_and_bounded() {
        let v = toy_vocab();
        let toks: Vec<_> = (0..50)
            .map(|i| token(i, ["read", "weed", "see"][i % 3], ["w i d", "w i", "s i d"][i % 3]))
            .collect();
        let opts = CalibrationOptions {
            sample_size: 10,
            seed: 7,
            ..Default::default()
        };
        let a = calibrate_beta(&toks, &[&UniformPrior], &v, &opts, None).unwrap();
        let b = calibrate_beta(&toks, &[&UniformPrior], &v, &opts, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sample_size, 10);
    }

    #[test]
    fn csv_shape() {
        let v = toy_vocab();
        let res = calibrate_beta(
            &[token(0, "read", "w i d")],
            &[&UniformPrior],
            &v,
            &CalibrationOptions::default(),
            None,
        )
        .unwrap();
        let csv = res.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "beta,mean_posterior_prob");
        assert_eq!(lines.len(), 52);
        assert!(lines[23].starts_with("3.2,"));
    }
}
