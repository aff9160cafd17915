use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{gain_over_uniform, kl_divergence, AnalysisError};
use crate::posterior::TokenScore;

/// Which distribution is compared against the uniform baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// The fitted prior: context only.
    Prior,
    /// The posterior under a uniform prior: perceptual data only.
    Data,
    /// The posterior under the fitted prior: context and data.
    Both,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::Prior => "prior",
            Condition::Data => "data",
            Condition::Both => "both",
        }
    }
}

/// Per-token information gains in bits, each `KL(updated ‖ uniform)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainObservation {
    pub token_id: String,
    pub age_months: Option<f64>,
    pub prior_bits: f64,
    pub data_bits: f64,
    pub both_bits: f64,
}

impl GainObservation {
    /// From full vectors: the fitted prior, the uniform-prior posterior and the
    /// fitted posterior, all over the same vocabulary.
    pub fn from_distributions(
        token_id: impl Into<String>,
        age_months: Option<f64>,
        fitted_prior: &[f64],
        uniform_posterior: &[f64],
        fitted_posterior: &[f64],
    ) -> Result<Self, AnalysisError> {
        let n = fitted_prior.len();
        let uniform = vec![1.0 / n as f64; n];
        Ok(GainObservation {
            token_id: token_id.into(),
            age_months,
            prior_bits: kl_divergence(fitted_prior, &uniform)?,
            data_bits: kl_divergence(uniform_posterior, &uniform)?,
            both_bits: kl_divergence(fitted_posterior, &uniform)?,
        })
    }

    /// From score rows, using `KL(p ‖ uniform) = log2 |V| - H(p)`.
    pub fn from_scores(fitted: &TokenScore, uniform: &TokenScore) -> Self {
        let n = fitted.vocab_size;
        GainObservation {
            token_id: fitted.token_id.clone(),
            age_months: fitted.age_months,
            prior_bits: gain_over_uniform(fitted.prior_entropy, n),
            data_bits: gain_over_uniform(uniform.posterior_entropy, n),
            both_bits: gain_over_uniform(fitted.posterior_entropy, n),
        }
    }

    /// Pairs fitted-prior and uniform-prior scores by token id.
    pub fn pair_scores(fitted: &[TokenScore], uniform: &[TokenScore]) -> Result<Vec<Self>, AnalysisError> {
        let by_id: HashMap<&str, &TokenScore> = uniform.iter().map(|t| (t.token_id.as_str(), t)).collect();
        if by_id.len() != fitted.len() {
            return Err(AnalysisError::TokenSetMismatch(format!(
                "{} fitted vs {} uniform tokens",
                fitted.len(),
                by_id.len()
            )));
        }
        fitted
            .iter()
            .map(|f| {
                let u = by_id.get(f.token_id.as_str()).ok_or_else(|| {
                    AnalysisError::TokenSetMismatch(format!("{} missing from uniform scores", f.token_id))
                })?;
                Ok(Self::from_scores(f, u))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoGainRecord {
    /// Inclusive lower and exclusive upper bound in months.
    pub age_lo: f64,
    pub age_hi: f64,
    pub gain_prior_bits: f64,
    pub gain_data_bits: f64,
    pub gain_both_bits: f64,
    pub n_tokens: usize,
}

impl InfoGainRecord {
    pub fn mean_bits(&self, c: Condition) -> f64 {
        match c {
            Condition::Prior => self.gain_prior_bits,
            Condition::Data => self.gain_data_bits,
            Condition::Both => self.gain_both_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoGainReport {
    pub bin_width_months: u32,
    pub records: Vec<InfoGainRecord>,
    /// Tokens left out because they carry no age.
    pub missing_age: usize,
}

impl InfoGainReport {
    /// Long format: `age_bin_lo,age_bin_hi,condition,mean_bits,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("age_bin_lo,age_bin_hi,condition,mean_bits,n\n");
        for r in &self.records {
            for c in [Condition::Prior, Condition::Data, Condition::Both] {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.age_lo,
                    r.age_hi,
                    c.label(),
                    r.mean_bits(c),
                    r.n_tokens
                ));
            }
        }
        out
    }
}

/// Mean gains per age bin `[k·w, (k+1)·w)`. Empty bins are not emitted.
pub fn information_gain_by_age(observations: &[GainObservation], bin_width_months: u32) -> InfoGainReport {
    assert!(bin_width_months > 0, "bin width must be positive");
    let w = bin_width_months as f64;
    let mut bins: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    let mut missing_age = 0;
    for o in observations {
        let Some(age) = o.age_months else {
            missing_age += 1;
            continue;
        };
        let k = (age / w).floor() as u64;
        let acc = bins.entry(k).or_insert((0.0, 0.0, 0.0, 0));
        acc.0 += o.prior_bits;
        acc.1 += o.data_bits;
        acc.2 += o.both_bits;
        acc.3 += 1;
    }
    let records = bins
        .into_iter()
        .map(|(k, (p, d, b, n))| InfoGainRecord {
            age_lo: k as f64 * w,
            age_hi: (k + 1) as f64 * w,
            gain_prior_bits: p / n as f64,
            gain_data_bits: d / n as f64,
            gain_both_bits: b / n as f64,
            n_tokens: n,
        })
        .collect();
    InfoGainReport {
        bin_width_months,
        records,
        missing_age,
    }
}
