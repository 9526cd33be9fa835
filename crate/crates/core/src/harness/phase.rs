//! Non-adaptive support recovery on either side of `r = beta`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::nonadaptive_threshold;
use crate::harness::config::{ExperimentConfig, Method, Sparsity};
use crate::harness::trial::{run_trial, DEFAULT_GRID_POINTS};
use crate::rng::{derive_seed, Phase, StreamTag};
use crate::signal::amplitude_from_r;

/// Trials count as successful when `max(FDP, NDP)` falls below this.
pub const DEFAULT_SUCCESS_LEVEL: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `r > beta`: the fixed threshold `sqrt(2 alpha ln p)` is used.
    Recoverable,
    /// `r < beta`: the best grid threshold per trial is reported.
    Unrecoverable,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Recoverable => "recoverable",
            Regime::Unrecoverable => "unrecoverable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRow {
    pub r: f64,
    pub regime: Regime,
    /// Fixed threshold in the recoverable regime.
    pub tau: Option<f64>,
    pub median_fdp: f64,
    pub median_ndp: f64,
    /// Fraction of trials with `max(FDP, NDP) < success_level`.
    pub success_fraction: f64,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs `trials` non-adaptive trials for each `r` with
/// `s = round(p^(1-beta))` nonzeros of amplitude `sqrt(2 r ln p)`.
///
/// `r == beta` is rejected. Each `r` gets its own seed derived from
/// `master_seed` and its position in `r_list`.
pub fn validate_phase_transition(
    p: usize,
    beta: f64,
    r_list: &[f64],
    trials: usize,
    master_seed: u64,
    success_level: f64,
) -> Result<Vec<PhaseRow>> {
    if r_list.is_empty() {
        return Err(Error::param("r list must not be empty"));
    }
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    r_list
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            if r == beta {
                return Err(Error::param(format!("r = beta = {beta} is the boundary itself and is not evaluated")));
            }
            let mu = amplitude_from_r(p as f64, r)?;
            let mut cfg = ExperimentConfig::new(p, Sparsity::Beta(beta), mu * mu);
            cfg.method = Method::Nonadaptive;
            cfg.trials = trials;
            cfg.master_seed = derive_seed(master_seed, Phase::Evaluation, k as u64, StreamTag::Signal);
            cfg.validate()?;
            let regime = if r > beta { Regime::Recoverable } else { Regime::Unrecoverable };
            let tau = match regime {
                Regime::Recoverable => Some(nonadaptive_threshold(p as f64, r, beta)?),
                Regime::Unrecoverable => None,
            };
            let points: Vec<(f64, f64)> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let out = run_trial(&cfg, t)?;
                    Ok(match tau {
                        // run_trial already used the fixed threshold for r > beta.
                        Some(_) => {
                            let m = out.metrics(Method::Nonadaptive).expect("nonadaptive was run");
                            (m.fdp, m.ndp)
                        }
                        None => {
                            let scored = out.scored(Method::Nonadaptive).expect("nonadaptive was run");
                            let grid = scored.default_grid(DEFAULT_GRID_POINTS);
                            let (_, f, n) = scored.best_minimax(&grid);
                            (f, n)
                        }
                    })
                })
                .collect::<Result<_>>()?;
            let success = points.iter().filter(|(f, n)| f.max(*n) < success_level).count();
            let mut f: Vec<f64> = points.iter().map(|x| x.0).collect();
            let mut n: Vec<f64> = points.iter().map(|x| x.1).collect();
            Ok(PhaseRow {
                r,
                regime,
                tau,
                median_fdp: median(&mut f),
                median_ndp: median(&mut n),
                success_fraction: success as f64 / trials as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_point_is_rejected() {
        assert!(validate_phase_transition(1 << 10, 0.5, &[0.5], 10, 0, 0.3).is_err());
        assert!(validate_phase_transition(1 << 10, 0.5, &[], 10, 0, 0.3).is_err());
    }

    #[test]
    fn strong_signal_is_recovered() {
        let rows = validate_phase_transition(1 << 12, 0.5, &[3.0, 0.1], 40, 1, 0.3).unwrap();
        assert_eq!(rows[0].regime, Regime::Recoverable);
        assert!(rows[0].median_fdp < 0.1 && rows[0].median_ndp < 0.1, "{:?}", rows[0]);
        assert_eq!(rows[1].regime, Regime::Unrecoverable);
        assert!(rows[1].success_fraction < 0.5, "{:?}", rows[1]);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
