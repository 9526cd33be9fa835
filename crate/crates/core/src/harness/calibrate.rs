//! Threshold calibration to a target false-discovery rate.
//!
//! Pilot trials are drawn once (their own seed phase, disjoint from
//! evaluation trials) and reused for every candidate threshold, so the
//! empirical FDR curve being bisected is a fixed function of the threshold.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::estimators::threshold_support;
use crate::harness::config::{ExperimentConfig, Method, DEFAULT_TARGET_FDR};
use crate::harness::trial::{require_single, run_trial, simulate, ScoredObservations};
use crate::harness::BudgetAudit;
use crate::metrics::{aggregate, TrialMetrics};
use crate::rng::Phase;

/// Stop once the empirical FDR is this close to the target.
pub const FDR_TOLERANCE: f64 = 0.005;
pub const MAX_BISECTION_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub tau: f64,
    /// Pilot FDR at `tau`.
    pub achieved_fdr: f64,
    /// False when no threshold in the searched range reaches the target from
    /// above, i.e. even the smallest threshold gives FDR below target.
    pub reachable: bool,
}

/// Pilot observations of one method, ready for repeated FDR evaluation.
#[derive(Debug, Clone)]
pub struct PilotSet {
    trials: Vec<ScoredObservations>,
}

impl PilotSet {
    /// Draws `config.pilot_trials` pilot trials for `method`. Only the
    /// largest observations of each trial are kept (see [`pilot_keep`]).
    pub fn draw(config: &ExperimentConfig, method: Method) -> Result<(Self, BudgetAudit)> {
        require_single(method)?;
        config.validate()?;
        let mut cfg = config.clone();
        cfg.method = method;
        let keep = pilot_keep(cfg.num_nonzero()?);
        let drawn: Vec<(ScoredObservations, f64)> = (0..cfg.pilot_trials as u64)
            .into_par_iter()
            .map(|t| {
                let raw = simulate(&cfg, Phase::Pilot, t)?;
                Ok(match method {
                    Method::Ds => {
                        let trace = raw.ds.expect("ds was run");
                        (ScoredObservations::truncated(trace.final_step().iter(), &raw.signal, keep), trace.budget_spent())
                    }
                    _ => {
                        let obs = raw.nonadaptive.expect("nonadaptive was run");
                        (ScoredObservations::truncated(obs.iter(), &raw.signal, keep), obs.budget_spent())
                    }
                })
            })
            .collect::<Result<_>>()?;
        let mut audit = BudgetAudit::default();
        for (_, spent) in &drawn {
            audit.record(*spent, cfg.p as f64);
        }
        Ok((PilotSet { trials: drawn.into_iter().map(|d| d.0).collect() }, audit))
    }

    pub fn from_trials(trials: Vec<ScoredObservations>) -> Self {
        PilotSet { trials }
    }

    /// Mean FDP at threshold `tau`.
    pub fn fdr(&self, tau: f64) -> f64 {
        self.trials.iter().map(|t| t.fdp_ndp(tau).0).sum::<f64>() / self.trials.len() as f64
    }

    /// Smallest threshold at which every trial's counts are exact.
    fn lower_limit(&self) -> f64 {
        self.trials.iter().map(ScoredObservations::floor).fold(f64::MIN_POSITIVE, f64::max)
    }

    fn upper_limit(&self) -> f64 {
        let hi = self.trials.iter().filter_map(ScoredObservations::max).fold(f64::NEG_INFINITY, f64::max);
        if hi > 0.0 {
            hi * (1.0 + 1e-9) + 1e-9
        } else {
            1.0
        }
    }

    /// Bisection on the threshold until the pilot FDR is within
    /// [`FDR_TOLERANCE`] of `target` or [`MAX_BISECTION_STEPS`] halvings.
    ///
    /// The bracket keeps `fdr(lo) > target >= fdr(hi)`; without early stop
    /// the upper end is returned, so the result never overshoots the target
    /// by more than the tolerance.
    pub fn calibrate(&self, target: f64) -> Calibration {
        let mut hi = self.upper_limit();
        if target <= 0.0 {
            return Calibration { tau: hi, achieved_fdr: self.fdr(hi), reachable: true };
        }
        let mut lo = self.lower_limit().min(hi);
        let f_lo = self.fdr(lo);
        if f_lo <= target {
            return Calibration { tau: lo, achieved_fdr: f_lo, reachable: false };
        }
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let f = self.fdr(mid);
            if (f - target).abs() <= FDR_TOLERANCE {
                return Calibration { tau: mid, achieved_fdr: f, reachable: true };
            }
            if f > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Calibration { tau: hi, achieved_fdr: self.fdr(hi), reachable: true }
    }
}

/// Pilot observations kept per trial: `max(16 s, 1024)`. At any threshold
/// below the kept range a trial declares more than `16 s` indices, so its FDP
/// is at least `15/16` and such thresholds never matter for targets below it.
pub fn pilot_keep(num_nonzero: usize) -> usize {
    (16 * num_nonzero).max(1024)
}

/// Calibrates `method`'s threshold on `config.pilot_trials` pilot trials.
pub fn calibrate_threshold_for_fdr(config: &ExperimentConfig, method: Method, target_fdr: f64) -> Result<Calibration> {
    let (pilot, _) = PilotSet::draw(config, method)?;
    Ok(pilot.calibrate(target_fdr))
}

/// Evaluates a fixed threshold on `config.trials` fresh evaluation trials.
pub fn evaluate_threshold(config: &ExperimentConfig, method: Method, tau: f64) -> Result<(Vec<TrialMetrics>, BudgetAudit)> {
    require_single(method)?;
    let mut cfg = config.clone();
    cfg.method = method;
    let metrics: Vec<TrialMetrics> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let out = run_trial(&cfg, t)?;
            let (obs, measurements, spent): (Vec<(usize, f64)>, usize, f64) = match method {
                Method::Ds => {
                    let o = out.ds.as_ref().expect("ds was run");
                    (o.trace.final_step().iter().collect(), o.trace.measurements(), o.trace.budget_spent())
                }
                _ => {
                    let o = out.nonadaptive.as_ref().expect("nonadaptive was run");
                    (o.observation.iter().collect(), cfg.p, o.observation.budget_spent())
                }
            };
            let est = threshold_support(obs, tau)?;
            Ok(TrialMetrics::evaluate(&est, &out.signal, measurements, spent))
        })
        .collect::<Result<_>>()?;
    let mut audit = BudgetAudit::default();
    for m in &metrics {
        audit.record(m.budget_spent, cfg.p as f64);
    }
    Ok((metrics, audit))
}

/// One line of an SNR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrSweepRow {
    pub method: Method,
    pub p: usize,
    pub snr: f64,
    pub calibrated_tau: f64,
    pub fdr: f64,
    pub ndr: f64,
    pub reachable: bool,
}

/// For each method and SNR: calibrate on pilot trials, then report FDR and
/// NDR over `config.trials` fresh trials at the calibrated threshold.
pub fn snr_sweep(config: &ExperimentConfig, snr_list: &[f64], target_fdr: Option<f64>) -> Result<(Vec<SnrSweepRow>, BudgetAudit)> {
    if snr_list.is_empty() {
        return Err(crate::error::Error::param("snr list must not be empty"));
    }
    let target = target_fdr.or(config.target_fdr).unwrap_or(DEFAULT_TARGET_FDR);
    let mut rows = Vec::new();
    let mut audit = BudgetAudit::default();
    for &method in config.method.expand() {
        for &snr in snr_list {
            let mut cfg = config.clone();
            cfg.snr = snr;
            cfg.validate()?;
            let (pilot, a) = PilotSet::draw(&cfg, method)?;
            audit.merge(&a);
            let cal = pilot.calibrate(target);
            let (metrics, a) = evaluate_threshold(&cfg, method, cal.tau)?;
            audit.merge(&a);
            let agg = aggregate(&metrics)?;
            log::info!("{method} p={} snr={snr}: tau={:.4} fdr={:.4} ndr={:.4}", cfg.p, cal.tau, agg.fdr, agg.ndr);
            rows.push(SnrSweepRow {
                method,
                p: cfg.p,
                snr,
                calibrated_tau: cal.tau,
                fdr: agg.fdr,
                ndr: agg.ndr,
                reachable: cal.reachable,
            });
        }
    }
    Ok((rows, audit))
}
