//! Seeded Monte Carlo experiments over Distilled Sensing and the
//! non-adaptive baseline.
//!
//! Trials run in parallel on the current rayon pool. Each trial derives its
//! own random streams from `(master_seed, trial_index)` and results are
//! collected in trial order, so output does not depend on the worker count.

pub mod calibrate;
pub mod config;
pub mod lemmas;
pub mod output;
pub mod phase;
pub mod sweep;
pub mod trial;

use serde::Serialize;

use crate::bounds::detection_boundary_rho;
use crate::error::Result;
use crate::sensing::BUDGET_REL_TOL;

pub use calibrate::{calibrate_threshold_for_fdr, evaluate_threshold, snr_sweep, Calibration, PilotSet, SnrSweepRow};
pub use config::{ConfigFile, ExperimentConfig, Method, Sparsity};
pub use lemmas::{validate_lemmas, LemmaCheck, LemmaSuiteConfig};
pub use phase::{validate_phase_transition, PhaseRow, Regime};
pub use sweep::{simulate_trials, sweep_thresholds, SimulationResult, SweepResult, SweepRow};
pub use trial::{run_trial, ScoredObservations, TrialOutcome};

/// Running record of precision spent per trial relative to the budget `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetAudit {
    pub trials_checked: usize,
    /// Largest `spent / total` seen.
    pub max_ratio: f64,
}

impl Default for BudgetAudit {
    fn default() -> Self {
        BudgetAudit { trials_checked: 0, max_ratio: 0.0 }
    }
}

impl BudgetAudit {
    pub fn record(&mut self, spent: f64, total: f64) {
        self.trials_checked += 1;
        self.max_ratio = self.max_ratio.max(spent / total);
    }

    pub fn merge(&mut self, other: &BudgetAudit) {
        self.trials_checked += other.trials_checked;
        self.max_ratio = self.max_ratio.max(other.max_ratio);
    }

    pub fn within_budget(&self) -> bool {
        self.max_ratio <= 1.0 + BUDGET_REL_TOL
    }
}

/// `(beta, rho(beta))` at `beta = i/n` for `i = 1..n-1`.
pub fn boundary_grid(n: usize) -> Result<Vec<(f64, f64)>> {
    (1..n)
        .map(|i| {
            let beta = i as f64 / n as f64;
            Ok((beta, detection_boundary_rho(beta)?))
        })
        .collect()
}
