//! False- and non-discovery proportions and their Monte Carlo averages.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::SupportEstimate;
use crate::signal::SparseSignal;

/// Fraction of declared indices that are not in the true support.
/// Zero when nothing is declared.
pub fn fdp(estimate: &SupportEstimate, truth: &SparseSignal) -> f64 {
    if estimate.is_empty() {
        return 0.0;
    }
    let false_hits = estimate.indices.iter().filter(|&&i| !truth.in_support(i)).count();
    false_hits as f64 / estimate.len() as f64
}

/// Fraction of true support indices that were not declared.
/// Zero when the true support is empty.
pub fn ndp(estimate: &SupportEstimate, truth: &SparseSignal) -> f64 {
    let s = truth.support();
    if s.is_empty() {
        return 0.0;
    }
    let missed = s.iter().filter(|i| estimate.indices.binary_search(i).is_err()).count();
    missed as f64 / s.len() as f64
}

/// Outcome of one method on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub fdp: f64,
    pub ndp: f64,
    pub detected: bool,
    pub measurements_used: usize,
    pub budget_spent: f64,
    /// FDP took the 0/0 convention (empty estimate).
    pub fdp_undefined: bool,
    /// NDP took the 0/0 convention (empty true support).
    pub ndp_undefined: bool,
}

impl TrialMetrics {
    pub fn evaluate(estimate: &SupportEstimate, truth: &SparseSignal, measurements_used: usize, budget_spent: f64) -> Self {
        TrialMetrics {
            fdp: fdp(estimate, truth),
            ndp: ndp(estimate, truth),
            detected: !estimate.is_empty(),
            measurements_used,
            budget_spent,
            fdp_undefined: estimate.is_empty(),
            ndp_undefined: truth.support().is_empty(),
        }
    }
}

/// Monte Carlo averages over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub fdr: f64,
    pub ndr: f64,
    pub detection_rate: f64,
}

pub fn aggregate(trials: &[TrialMetrics]) -> Result<Aggregate> {
    if trials.is_empty() {
        return Err(Error::param("cannot aggregate zero trials"));
    }
    let n = trials.len() as f64;
    let (f, d, det) = trials.iter().fold((0.0, 0.0, 0.0), |(f, d, det), t| {
        (f + t.fdp, d + t.ndp, det + if t.detected { 1.0 } else { 0.0 })
    });
    Ok(Aggregate { fdr: f / n, ndr: d / n, detection_rate: det / n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(indices: Vec<usize>) -> SupportEstimate {
        SupportEstimate { indices, threshold: 1.0 }
    }

    #[test]
    fn fdp_examples() {
        let truth = SparseSignal::from_support(5, vec![1, 2], 1.0).unwrap();
        assert!((fdp(&est(vec![1, 2, 3]), &truth) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(fdp(&est(vec![]), &truth), 0.0);
        assert_eq!(fdp(&est(vec![1, 2]), &truth), 0.0);
    }

    #[test]
    fn ndp_examples() {
        let truth = SparseSignal::from_support(6, vec![1, 2, 3, 4], 1.0).unwrap();
        assert_eq!(ndp(&est(vec![1]), &truth), 0.75);
        assert_eq!(ndp(&est(vec![0, 1, 2, 3, 4, 5]), &truth), 0.0);
        assert_eq!(ndp(&est(vec![1]), &SparseSignal::null(6)), 0.0);
    }

    #[test]
    fn conventions_are_flagged() {
        let m = TrialMetrics::evaluate(&est(vec![]), &SparseSignal::null(3), 3, 3.0);
        assert!(m.fdp_undefined && m.ndp_undefined && !m.detected);
    }

    fn tm(fdp: f64, ndp: f64, detected: bool) -> TrialMetrics {
        TrialMetrics { fdp, ndp, detected, measurements_used: 0, budget_spent: 0.0, fdp_undefined: false, ndp_undefined: false }
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[tm(0.2, 0.3, true)]).unwrap();
        assert_eq!((one.fdr, one.ndr, one.detection_rate), (0.2, 0.3, 1.0));
        let half = aggregate(&[tm(0.0, 0.0, false), tm(1.0, 0.0, true)]).unwrap();
        assert_eq!(half.fdr, 0.5);
        assert_eq!(half.detection_rate, 0.5);
        assert!(aggregate(&[]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariance_and_precision_identity(
            seed in any::<u64>(), p in 2usize..60, s_frac in 0.0f64..1.0, e_frac in 0.0f64..1.0,
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (0..p).collect();
            all.shuffle(&mut rng);
            let s: Vec<usize> = all[..(s_frac * p as f64) as usize].to_vec();
            all.shuffle(&mut rng);
            let mut e: Vec<usize> = all[..(e_frac * p as f64) as usize].to_vec();
            e.sort_unstable();
            let truth = SparseSignal::from_support(p, s.clone(), 1.0).unwrap();
            let estimate = est(e.clone());
            let (f, d) = (fdp(&estimate, &truth), ndp(&estimate, &truth));
            prop_assert!((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&d));

            let mut perm: Vec<usize> = (0..p).collect();
            perm.shuffle(&mut rng);
            let pt = truth.permuted(&perm);
            let mut pe: Vec<usize> = e.iter().map(|&i| perm[i]).collect();
            pe.sort_unstable();
            prop_assert_eq!(fdp(&est(pe.clone()), &pt), f);
            prop_assert_eq!(ndp(&est(pe), &pt), d);

            if !e.is_empty() {
                let hits = e.iter().filter(|i| s.contains(i)).count() as f64;
                prop_assert!((f + hits / e.len() as f64 - 1.0).abs() < 1e-12);
            }
        }
    }
}
