//! Posterior over the vocabulary and its information summaries.
//!
//! Products are formed in natural-log space and converted to bits only when
//! reported: with thousands of candidates and β up to 6 the linear products
//! underflow.

use serde::{Deserialize, Serialize};

use crate::corpus::{ProductionToken, TokenKind};
use crate::likelihood::{
    likelihood_vector, likelihood_vector_cached, DistanceCache, LikelihoodConfig, LikelihoodVector,
};
use crate::priors::{PriorDistribution, PriorError, PriorSource};
use crate::vocabulary::CandidateVocab;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum PosteriorError {
    #[error("prior and likelihood lengths differ ({prior} vs {likelihood})")]
    LengthMismatch { prior: usize, likelihood: usize },
    #[error("every candidate has zero joint probability")]
    DegenerateDenominator,
    #[error("word {0:?} is not in the candidate vocabulary")]
    WordNotInVocab(String),
}

/// `ln Σ exp(x)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalized log posterior from log prior and log likelihood.
pub fn log_posterior(ln_prior: &[f64], ln_lik: &[f64]) -> Result<Vec<f64>, PosteriorError> {
    if ln_prior.len() != ln_lik.len() {
        return Err(PosteriorError::LengthMismatch {
            prior: ln_prior.len(),
            likelihood: ln_lik.len(),
        });
    }
    let joint: Vec<f64> = ln_prior.iter().zip(ln_lik).map(|(p, l)| p + l).collect();
    let z = log_sum_exp(&joint);
    if z == f64::NEG_INFINITY {
        return Err(PosteriorError::DegenerateDenominator);
    }
    Ok(joint.iter().map(|j| j - z).collect())
}

/// Elementwise product of prior and likelihood, renormalized.
pub fn posterior(prior: &PriorDistribution, lik: &LikelihoodVector) -> Result<Vec<f64>, PosteriorError> {
    posterior_ln(prior.probs(), &lik.ln_weights())
}

/// As [`posterior`], taking the prior in probability space and the likelihood in log space.
pub fn posterior_ln(prior: &[f64], ln_lik: &[f64]) -> Result<Vec<f64>, PosteriorError> {
    let ln_prior: Vec<f64> = prior.iter().map(|p| p.ln()).collect();
    Ok(log_posterior(&ln_prior, ln_lik)?.into_iter().map(f64::exp).collect())
}

/// Direct linear-space evaluation. Only meaningful where the products do not
/// underflow; kept as a cross-check on the log-space route.
pub fn posterior_linear(prior: &[f64], lik: &[f64]) -> Result<Vec<f64>, PosteriorError> {
    if prior.len() != lik.len() {
        return Err(PosteriorError::LengthMismatch {
            prior: prior.len(),
            likelihood: lik.len(),
        });
    }
    let joint: Vec<f64> = prior.iter().zip(lik).map(|(p, l)| p * l).collect();
    let z: f64 = joint.iter().sum();
    if z.is_nan() || z <= 0.0 {
        return Err(PosteriorError::DegenerateDenominator);
    }
    Ok(joint.iter().map(|j| j / z).collect())
}

/// `-log2 p`.
pub fn surprisal_bits(p: f64) -> f64 {
    -p.log2()
}

/// Surprisal of `word` under `dist`, in bits.
pub fn surprisal(dist: &[f64], word: &str, vocab: &CandidateVocab) -> Result<f64, PosteriorError> {
    let i = vocab
        .index_of(word)
        .ok_or_else(|| PosteriorError::WordNotInVocab(word.to_string()))?;
    Ok(surprisal_bits(dist[i]))
}

/// Shannon entropy in bits, with `0 · log 0 = 0`.
///
/// An all-equal vector returns `log2 n` directly.
pub fn entropy(dist: &[f64]) -> f64 {
    if let Some(first) = dist.first() {
        if *first > 0.0 && dist.iter().all(|p| p == first) {
            return (dist.len() as f64).log2();
        }
    }
    // Neumaier summation; the vocabularies are large.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &p in dist {
        if p > 0.0 {
            let term = -p * p.log2();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
    }
    (sum + comp).max(0.0)
}

/// Everything computed for one token under one prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    pub token_id: String,
    pub kind: TokenKind,
    pub age_months: Option<f64>,
    pub prior: Vec<f64>,
    pub posterior: Vec<f64>,
    /// Present for successes whose gloss is a candidate.
    pub prior_surprisal_bits: Option<f64>,
    pub posterior_surprisal_bits: Option<f64>,
    pub prior_entropy_bits: f64,
    pub posterior_entropy_bits: f64,
    pub edit_distance_to_gloss: Option<u32>,
    pub top_k: Vec<(String, f64)>,
}

impl PosteriorResult {
    /// The vector-free summary written to score files.
    pub fn to_score(&self) -> TokenScore {
        TokenScore {
            token_id: self.token_id.clone(),
            kind: self.kind.label().to_string(),
            age_months: self.age_months,
            edit_distance: self.edit_distance_to_gloss,
            prior_surprisal: self.prior_surprisal_bits,
            posterior_surprisal: self.posterior_surprisal_bits,
            posterior_entropy: self.posterior_entropy_bits,
            prior_entropy: self.prior_entropy_bits,
            vocab_size: self.posterior.len(),
            top_k: self.top_k.clone(),
        }
    }
}

/// One row of a score file: per-token summaries without the full vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token_id: String,
    /// `success` or `failure`.
    pub kind: String,
    pub age_months: Option<f64>,
    pub edit_distance: Option<u32>,
    pub prior_surprisal: Option<f64>,
    pub posterior_surprisal: Option<f64>,
    pub posterior_entropy: f64,
    pub prior_entropy: f64,
    pub vocab_size: usize,
    pub top_k: Vec<(String, f64)>,
}

impl TokenScore {
    pub fn is_success(&self) -> bool {
        self.kind == "success"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub likelihood: LikelihoodConfig,
    pub top_k: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            likelihood: LikelihoodConfig::default(),
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("gloss {gloss:?} of token {token_id} is not a candidate")]
    GlossNotInVocab { token_id: String, gloss: String },
    #[error("token {token_id}: {source}")]
    Prior {
        token_id: String,
        #[source]
        source: PriorError,
    },
    #[error("token {token_id}: {source}")]
    Posterior {
        token_id: String,
        #[source]
        source: PosteriorError,
    },
}

impl ScoreError {
    /// Short reason code for run reports.
    pub fn code(&self) -> &'static str {
        match self {
            ScoreError::GlossNotInVocab { .. } => "gloss_not_in_vocab",
            ScoreError::Prior {
                source: PriorError::ProviderUnreachable(_),
                ..
            } => "provider_unreachable",
            ScoreError::Prior { .. } => "prior_rejected",
            ScoreError::Posterior { .. } => "degenerate_posterior",
        }
    }
}

fn top_k(dist: &[f64], vocab: &CandidateVocab, k: usize) -> Vec<(String, f64)> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    idx.into_iter()
        .take(k)
        .map(|i| (vocab.word(i).to_string(), dist[i]))
        .collect()
}

/// Scores one token: prior, likelihood, posterior and their summaries.
pub fn score_token(
    token: &ProductionToken,
    prior_source: &dyn PriorSource,
    vocab: &CandidateVocab,
    cfg: &ScoreConfig,
    cache: Option<&DistanceCache>,
) -> Result<PosteriorResult, ScoreError> {
    let gloss_index = match &token.kind {
        TokenKind::Success { gloss } => Some(vocab.index_of(gloss).ok_or_else(|| ScoreError::GlossNotInVocab {
            token_id: token.id.clone(),
            gloss: gloss.clone(),
        })?),
        TokenKind::Failure => None,
    };
    let prior = prior_source
        .prior(&token.context, vocab)
        .map_err(|source| ScoreError::Prior {
            token_id: token.id.clone(),
            source,
        })?;
    let lik = match cache {
        Some(c) => likelihood_vector_cached(&token.observed, vocab, &cfg.likelihood, c),
        None => likelihood_vector(&token.observed, vocab, &cfg.likelihood),
    };
    let post = posterior(&prior, &lik).map_err(|source| ScoreError::Posterior {
        token_id: token.id.clone(),
        source,
    })?;
    Ok(PosteriorResult {
        token_id: token.id.clone(),
        kind: token.kind.clone(),
        age_months: token.age_months,
        prior_surprisal_bits: gloss_index.map(|i| surprisal_bits(prior.probs()[i])),
        posterior_surprisal_bits: gloss_index.map(|i| surprisal_bits(post[i])),
        prior_entropy_bits: entropy(prior.probs()),
        posterior_entropy_bits: entropy(&post),
        edit_distance_to_gloss: gloss_index.map(|i| lik.distances()[i]),
        top_k: top_k(&post, vocab, cfg.top_k),
        prior: prior.probs().to_vec(),
        posterior: post,
    })
}
