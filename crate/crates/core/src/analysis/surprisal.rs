use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalysisError;
use crate::posterior::TokenScore;

/// Edit-distance bins `0, 1, …, open_from - 1, open_from+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistanceBins {
    pub open_from: u32,
}

impl Default for DistanceBins {
    fn default() -> Self {
        DistanceBins { open_from: 3 }
    }
}

impl DistanceBins {
    pub fn bin(&self, d: u32) -> u32 {
        d.min(self.open_from)
    }

    pub fn label(&self, bin: u32) -> String {
        if bin >= self.open_from {
            format!("{}+", self.open_from)
        } else {
            bin.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub n: usize,
    pub mean_prior_surprisal: f64,
    pub sem_prior_surprisal: Option<f64>,
    pub mean_posterior_surprisal: f64,
    pub sem_posterior_surprisal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceBinSummary {
    pub model: String,
    pub bin: String,
    pub n: usize,
    pub mean_posterior_surprisal: f64,
    pub sem: Option<f64>,
}

/// Two-sided paired t-test on per-token surprisal differences (`a - b`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedTest {
    /// `prior` or `posterior` surprisal.
    pub quantity: &'static str,
    pub model_a: String,
    pub model_b: String,
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: Option<f64>,
    /// Undefined when every difference is identical.
    pub t: Option<f64>,
    pub df: usize,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurprisalReport {
    pub models: Vec<ModelSummary>,
    pub by_distance: Vec<DistanceBinSummary>,
    pub paired: Vec<PairedTest>,
    /// Surprisals are averaged arithmetically over tokens.
    pub averaging: &'static str,
}

/// Shifted by the first value so constant input gives that value exactly.
fn mean(xs: &[f64]) -> f64 {
    let k = xs[0];
    k + xs.iter().map(|x| x - k).sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

fn sem(xs: &[f64]) -> Option<f64> {
    sample_sd(xs).map(|sd| sd / (xs.len() as f64).sqrt())
}

fn paired(quantity: &'static str, a: &str, b: &str, xa: &[f64], xb: &[f64]) -> PairedTest {
    let diffs: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mean_diff = if n == 0 { 0.0 } else { mean(&diffs) };
    let sd = sample_sd(&diffs);
    let df = n.saturating_sub(1);
    let t = sd.filter(|s| *s > 0.0).map(|s| mean_diff / (s / (n as f64).sqrt()));
    let p_value = t.and_then(|t| {
        let dist = StudentsT::new(0.0, 1.0, df as f64).ok()?;
        Some(2.0 * (1.0 - dist.cdf(t.abs())))
    });
    PairedTest {
        quantity,
        model_a: a.to_string(),
        model_b: b.to_string(),
        n,
        mean_diff,
        sd_diff: sd,
        t,
        df,
        p_value,
    }
}

/// Prior surprisal, posterior surprisal and edit distance of one success.
type SuccessRow = (f64, f64, Option<u32>);

/// Per-model mean surprisals, posterior surprisal by edit-distance bin, and
/// paired t-tests between every pair of models.
///
/// Only successes with a surprisal contribute. All models must have scored the
/// same token ids.
pub fn surprisal_report(
    models: &[(String, Vec<TokenScore>)],
    bins: DistanceBins,
) -> Result<SurprisalReport, AnalysisError> {
    let Some((first_name, first)) = models.first() else {
        return Err(AnalysisError::NoModels);
    };
    let reference: BTreeSet<&str> = first.iter().map(|t| t.token_id.as_str()).collect();
    for (name, scores) in &models[1..] {
        let ids: BTreeSet<&str> = scores.iter().map(|t| t.token_id.as_str()).collect();
        if ids != reference {
            return Err(AnalysisError::TokenSetMismatch(format!(
                "{name} has {} tokens, {first_name} has {}; {} differ",
                ids.len(),
                reference.len(),
                ids.symmetric_difference(&reference).count()
            )));
        }
    }

    let per_model: Vec<BTreeMap<&str, SuccessRow>> = models
        .iter()
        .map(|(_, scores)| {
            scores
                .iter()
                .filter(|t| t.is_success())
                .filter_map(|t| {
                    Some((
                        t.token_id.as_str(),
                        (t.prior_surprisal?, t.posterior_surprisal?, t.edit_distance),
                    ))
                })
                .collect()
        })
        .collect();

    let mut summaries = Vec::new();
    let mut by_distance = Vec::new();
    for ((name, _), rows) in models.iter().zip(&per_model) {
        let prior: Vec<f64> = rows.values().map(|r| r.0).collect();
        let post: Vec<f64> = rows.values().map(|r| r.1).collect();
        let n = prior.len();
        summaries.push(ModelSummary {
            model: name.clone(),
            n,
            mean_prior_surprisal: if n == 0 { f64::NAN } else { mean(&prior) },
            sem_prior_surprisal: sem(&prior),
            mean_posterior_surprisal: if n == 0 { f64::NAN } else { mean(&post) },
            sem_posterior_surprisal: sem(&post),
        });

        let mut binned: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for (_, post, d) in rows.values() {
            if let Some(d) = d {
                binned.entry(bins.bin(*d)).or_default().push(*post);
            }
        }
        for (bin, xs) in binned {
            by_distance.push(DistanceBinSummary {
                model: name.clone(),
                bin: bins.label(bin),
                n: xs.len(),
                mean_posterior_surprisal: mean(&xs),
                sem: sem(&xs),
            });
        }
    }

    let mut paired_tests = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            let common: Vec<&str> = per_model[i]
                .keys()
                .filter(|k| per_model[j].contains_key(*k))
                .copied()
                .collect();
            for (quantity, pick) in [("prior", 0usize), ("posterior", 1usize)] {
                let get = |m: &BTreeMap<&str, (f64, f64, Option<u32>)>, k: &str| {
                    let r = m[k];
                    if pick == 0 {
                        r.0
                    } else {
                        r.1
                    }
                };
                let xa: Vec<f64> = common.iter().map(|k| get(&per_model[i], k)).collect();
                let xb: Vec<f64> = common.iter().map(|k| get(&per_model[j], k)).collect();
                paired_tests.push(paired(quantity, &models[i].0, &models[j].0, &xa, &xb));
            }
        }
    }

    Ok(SurprisalReport {
        models: summaries,
        by_distance,
        paired: paired_tests,
        averaging: "arithmetic_mean_over_tokens",
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl SurprisalReport {
    pub fn by_model_csv(&self) -> String {
        let mut out = String::from(
            "model,n,mean_prior_surprisal,sem_prior_surprisal,mean_posterior_surprisal,sem_posterior_surprisal\n",
        );
        for m in &self.models {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.model,
                m.n,
                m.mean_prior_surprisal,
                opt(m.sem_prior_surprisal),
                m.mean_posterior_surprisal,
                opt(m.sem_posterior_surprisal)
            ));
        }
        out
    }

    pub fn by_distance_csv(&self) -> String {
        let mut out = String::from("model,distance_bin,mean,sem,n\n");
        for b in &self.by_distance {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.model,
                b.bin,
                b.mean_posterior_surprisal,
                opt(b.sem),
                b.n
            ));
        }
        out
    }

    pub fn paired_csv(&self) -> String {
        let mut out = String::from("quantity,model_a,model_b,n,mean_diff,sd_diff,t,df,p_value\n");
        for p in &self.paired {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.quantity,
                p.model_a,
                p.model_b,
                p.n,
                p.mean_diff,
                opt(p.sd_diff),
                opt(p.t),
                p.df,
                opt(p.p_value)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(id: &str, prior: f64, post: f64, d: u32) -> TokenScore {
        TokenScore {
            token_id: id.into(),
            kind: "success".into(),
            age_months: None,
            edit_distance: Some(d),
            prior_surprisal: Some(prior),
            posterior_surprisal: Some(post),
            posterior_entropy: 0.0,
            prior_entropy: 0.0,
            vocab_size: 10,
            top_k: vec![],
        }
    }

    fn failure(id: &str) -> TokenScore {
        TokenScore {
            kind: "failure".into(),
            prior_surprisal: None,
            posterior_surprisal: None,
            edit_distance: None,
            ..score(id, 0.0, 0.0, 0)
        }
    }

    #[test]
    fn toy_mean() {
        let r = surprisal_report(
            &[(
                "m".into(),
                vec![score("a", 1.0, 0.5, 0), score("b", 3.0, 1.5, 5), failure("c")],
            )],
            DistanceBins::default(),
        )
        .unwrap();
        assert_eq!(r.models[0].mean_prior_surprisal, 2.0);
        assert_eq!(r.models[0].mean_posterior_surprisal, 1.0);
        assert_eq!(r.models[0].n, 2);
        let labels: Vec<&str> = r.by_distance.iter().map(|b| b.bin.as_str()).collect();
        assert_eq!(labels, ["0", "3+"]);
    }

    #[test]
    fn identical_models_have_zero_difference() {
        let scores = vec![score("a", 1.0, 0.5, 0), score("b", 3.0, 1.5, 1)];
        let r = surprisal_report(
            &[("x".into(), scores.clone()), ("y".into(), scores)],
            DistanceBins::default(),
        )
        .unwrap();
        for p in &r.paired {
            assert_eq!(p.mean_diff, 0.0);
            assert_eq!(p.t, None);
        }
    }

    #[test]
    fn paired_t_matches_hand_computation() {
        // diffs 1, 2, 3: mean 2, sd 1, t = 2 / (1 / √3)
        let a = vec![
            score("a", 2.0, 0.0, 0),
            score("b", 4.0, 0.0, 0),
            score("c", 6.0, 0.0, 0),
        ];
        let b = vec![
            score("a", 1.0, 0.0, 0),
            score("b", 2.0, 0.0, 0),
            score("c", 3.0, 0.0, 0),
        ];
        let r = surprisal_report(&[("a".into(), a), ("b".into(), b)], DistanceBins::default()).unwrap();
        let p = r.paired.iter().find(|p| p.quantity == "prior").unwrap();
        assert_eq!(p.mean_diff, 2.0);
        assert!((p.t.unwrap() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(p.df, 2);
        // t(2) two-sided p for 3.4641 is 0.0742 (tables)
        assert!((p.p_value.unwrap() - 0.0742).abs() < 1e-3);
    }

    #[test]
    fn mismatched_token_sets() {
        let r = surprisal_report(
            &[
                ("x".into(), vec![score("a", 1.0, 1.0, 0)]),
                ("y".into(), vec![score("b", 1.0, 1.0, 0)]),
            ],
            DistanceBins::default(),
        );
        assert!(matches!(r, Err(AnalysisError::TokenSetMismatch(_))));
    }

    #[test]
    fn order_invariant() {
        let mut s = vec![
            score("a", 1.0, 0.5, 0),
            score("b", 3.0, 1.5, 1),
            score("c", 2.5, 2.0, 4),
        ];
        let r1 = surprisal_report(&[("m".into(), s.clone())], DistanceBins::default()).unwrap();
        s.reverse();
        let r2 = surprisal_report(&[("m".into(), s)], DistanceBins::default()).unwrap();
        assert_eq!(r1, r2);
    }
}
