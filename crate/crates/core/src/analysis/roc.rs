use serde::Serialize;

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    /// Predict failure when entropy ≥ threshold.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// `threshold,fpr,tpr` with a header row; infinite thresholds print as `inf`/`-inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }

    /// Trapezoidal area under the points.
    pub fn trapezoid(points: &[RocPoint]) -> f64 {
        points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

/// ROC of posterior entropy as a detector of communicative failures.
///
/// Failures are the positive class. Thresholds sweep `+∞`, every distinct
/// entropy in descending order, then `-∞`, so the curve runs from (0,0) to (1,1).
pub fn roc_failures(success_entropies: &[f64], failure_entropies: &[f64]) -> Result<RocCurve, AnalysisError> {
    if success_entropies.is_empty() {
        return Err(AnalysisError::EmptyClass("success"));
    }
    if failure_entropies.is_empty() {
        return Err(AnalysisError::EmptyClass("failure"));
    }
    if let Some(bad) = success_entropies
        .iter()
        .chain(failure_entropies)
        .find(|e| !e.is_finite())
    {
        return Err(AnalysisError::NonFinite(*bad));
    }

    // (entropy, is_failure), descending by entropy
    let mut scored: Vec<(f64, bool)> = success_entropies
        .iter()
        .map(|e| (*e, false))
        .chain(failure_entropies.iter().map(|e| (*e, true)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let n_pos = failure_entropies.len() as f64;
    let n_neg = success_entropies.len() as f64;
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let t = scored[i].0;
        while i < scored.len() && scored[i].0 == t {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / n_neg,
            tpr: tp as f64 / n_pos,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    let auc = RocCurve::trapezoid(&points);
    Ok(RocCurve { points, auc })
}

/// `P(failure > success) + ½ P(failure = success)` by rank sums, O(n log n).
pub fn mann_whitney_auc(success_entropies: &[f64], failure_entropies: &[f64]) -> Result<f64, AnalysisError> {
    if success_entropies.is_empty() {
        return Err(AnalysisError::EmptyClass("success"));
    }
    if failure_entropies.is_empty() {
        return Err(AnalysisError::EmptyClass("failure"));
    }
    let mut all: Vec<(f64, bool)> = success_entropies
        .iter()
        .map(|e| (*e, false))
        .chain(failure_entropies.iter().map(|e| (*e, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // midranks for ties
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += midrank * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let n_pos = failure_entropies.len() as f64;
    let n_neg = success_entropies.len() as f64;
    let u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(s: &[f64], f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for x in f {
            for y in s {
                acc += if x > y {
                    1.0
                } else if x == y {
                    0.5
                } else {
                    0.0
                };
            }
        }
        acc / (s.len() * f.len()) as f64
    }

    #[test]
    fn perfect_separation() {
        let c = roc_failures(&[0.1, 0.2], &[1.0, 2.0]).unwrap();
        assert_eq!(c.auc, 1.0);
    }

    #[test]
    fn constant_inputs_are_chance() {
        let c = roc_failures(&[1.0; 5], &[1.0; 3]).unwrap();
        assert_eq!(c.auc, 0.5);
        for p in &c.points {
            assert_eq!(p.fpr, p.tpr);
        }
        assert_eq!(c.points.first().unwrap().fpr, 0.0);
        assert_eq!(c.points.last().unwrap().tpr, 1.0);
    }

    #[test]
    fn small_example() {
        // pairs (f, s): (2,1) (2,3) (4,1) (4,3) → 3 of 4
        let c = roc_failures(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_eq!(c.auc, 0.75);
        assert_eq!(pairwise(&[1.0, 3.0], &[2.0, 4.0]), 0.75);
        assert_eq!(mann_whitney_auc(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.75);
    }

    #[test]
    fn empty_class() {
        assert_eq!(roc_failures(&[], &[1.0]), Err(AnalysisError::EmptyClass("success")));
        assert_eq!(roc_failures(&[1.0], &[]), Err(AnalysisError::EmptyClass("failure")));
    }

    #[test]
    fn csv_infinite_thresholds() {
        let csv = roc_failures(&[1.0], &[2.0]).unwrap().to_csv();
        assert_eq!(csv, "threshold,fpr,tpr\ninf,0,0\n2,0,1\n1,1,1\n-inf,1,1\n");
    }

    fn entropies() -> impl Strategy<Value = Vec<f64>> {
        // coarse values so ties occur
        prop::collection::vec((0u8..20).prop_map(|v| v as f64 / 4.0), 1..50)
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(s in entropies(), f in entropies()) {
            let c = roc_failures(&s, &f).unwrap();
            prop_assert!((c.auc - pairwise(&s, &f)).abs() < 1e-9);
            prop_assert!((mann_whitney_auc(&s, &f).unwrap() - pairwise(&s, &f)).abs() < 1e-9);
            for w in c.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
        }

        #[test]
        fn permutation_invariant(mut s in entropies(), mut f in entropies()) {
            let a = roc_failures(&s, &f).unwrap();
            s.reverse();
            f.reverse();
            let b = roc_failures(&s, &f).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
