use rayon::prelude::*;

use crate::error::Result;
use crate::harness::config::{ExperimentConfig, Method};
use crate::harness::trial::{run_trial, ScoredObservations, DEFAULT_GRID_POINTS};
use crate::harness::BudgetAudit;
use crate::metrics::TrialMetrics;

/// One `(method, trial, threshold)` operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub snr: f64,
    pub trial: u64,
    pub threshold: f64,
    pub fdp: f64,
    pub ndp: f64,
    pub detected: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub audit: BudgetAudit,
}

/// Rows for one method on one trial over `grid`.
pub fn sweep_observations(method: Method, snr: f64, trial: u64, scored: &ScoredObservations, grid: &[f64]) -> Vec<SweepRow> {
    grid.iter()
        .map(|&tau| {
            let (fdp, ndp) = scored.fdp_ndp(tau);
            SweepRow { method, snr, trial, threshold: tau, fdp, ndp, detected: scored.counts_at(tau).0 > 0 }
        })
        .collect()
}

/// FDP/NDP operating points over a threshold grid for every trial and
/// method. The grid is `config.threshold_grid` when set, otherwise
/// [`DEFAULT_GRID_POINTS`] thresholds spanning each trial's observations.
///
/// Rows are ordered by trial, then method, then threshold.
pub fn sweep_thresholds(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let per_trial: Vec<(Vec<SweepRow>, BudgetAudit)> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let out = run_trial(config, t)?;
            let mut rows = Vec::new();
            let mut audit = BudgetAudit::default();
            for &m in config.method.expand() {
                let scored = out.scored(m).expect("method was run");
                let grid = match &config.threshold_grid {
                    Some(g) => g.clone(),
                    None => scored.default_grid(DEFAULT_GRID_POINTS),
                };
                rows.extend(sweep_observations(m, config.snr, t, &scored, &grid));
                audit.record(out.metrics(m).expect("method was run").budget_spent, config.p as f64);
            }
            Ok((rows, audit))
        })
        .collect::<Result<_>>()?;
    let mut audit = BudgetAudit::default();
    let mut rows = Vec::with_capacity(per_trial.iter().map(|r| r.0.len()).sum());
    for (r, a) in per_trial {
        rows.extend(r);
        audit.merge(&a);
    }
    Ok(SweepResult { rows, audit })
}

/// Per-trial metrics at each method's default threshold.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub rows: Vec<(Method, u64, TrialMetrics)>,
    pub audit: BudgetAudit,
}

pub fn simulate_trials(config: &ExperimentConfig) -> Result<SimulationResult> {
    config.validate()?;
    let per_trial: Vec<Vec<(Method, u64, TrialMetrics)>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let out = run_trial(config, t)?;
            Ok(config.method.expand().iter().map(|&m| (m, t, *out.metrics(m).expect("method was run"))).collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<_> = per_trial.into_iter().flatten().collect();
    let mut audit = BudgetAudit::default();
    for (_, _, m) in &rows {
        audit.record(m.budget_spent, config.p as f64);
    }
    Ok(SimulationResult { rows, audit })
}
