//! Measurement model, precision budgeting and the Distilled Sensing loop.
//!
//! An observation of coordinate `i` taken with precision `gamma` is
//! `y_i = x_i + gamma^{-1/2} w_i` with `w_i ~ N(0, 1)`. The precisions of all
//! observations taken over a run must sum to at most the total budget, which
//! is `p` for a run comparable to a single unit-variance look at every
//! coordinate.

use crate::error::{Error, Result};
use crate::rng::NoiseSource;
use crate::signal::SparseSignal;

/// Relative slack allowed when checking that a run stayed within budget.
pub const BUDGET_REL_TOL: f64 = 1e-9;

/// Default ratio between consecutive step budgets.
pub const DEFAULT_DECAY: f64 = 0.75;

/// Number of distillation steps for dimension `p`:
/// `max(ceil(log2(ln p)), 0) + 2`.
pub fn steps_k(p: usize) -> Result<usize> {
    if p < 2 {
        return Err(Error::param(format!("p must be at least 2, got {p}")));
    }
    let lg = (p as f64).ln().log2().ceil();
    Ok(lg.max(0.0) as usize + 2)
}

/// Per-step precision budgets `R_1..R_k` and the total they must fit in.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionAllocation {
    budgets: Vec<f64>,
    total_budget: f64,
}

impl PrecisionAllocation {
    /// Validates an arbitrary schedule: positive budgets, consecutive ratios
    /// above one half (except into the final step), and a sum within the
    /// total.
    pub fn new(budgets: Vec<f64>, total_budget: f64) -> Result<Self> {
        if budgets.is_empty() {
            return Err(Error::param("allocation needs at least one step"));
        }
        if !(total_budget > 0.0) || !total_budget.is_finite() {
            return Err(Error::param(format!("total budget must be positive, got {total_budget}")));
        }
        if let Some(b) = budgets.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::param(format!("step budgets must be positive, got {b}")));
        }
        let k = budgets.len();
        // The ratio condition applies to j = 1..k-2; the last step is free.
        for j in 0..k.saturating_sub(2) {
            let ratio = budgets[j + 1] / budgets[j];
            if !(ratio > 0.5) {
                return Err(Error::param(format!(
                    "budget ratio R_{}/R_{} = {ratio} must exceed 1/2",
                    j + 2,
                    j + 1
                )));
            }
        }
        let sum: f64 = budgets.iter().sum();
        if sum > total_budget * (1.0 + BUDGET_REL_TOL) {
            return Err(Error::param(format!("step budgets sum to {sum}, above total {total_budget}")));
        }
        Ok(PrecisionAllocation { budgets, total_budget })
    }

    pub fn steps(&self) -> usize {
        self.budgets.len()
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    /// `R_j` for a one-based step index.
    pub fn budget(&self, j: usize) -> f64 {
        self.budgets[j - 1]
    }

    /// `c_1 = R_1 / p`.
    pub fn first_fraction(&self, p: usize) -> f64 {
        self.budgets[0] / p as f64
    }

    /// `c_k = R_k / p`.
    pub fn last_fraction(&self, p: usize) -> f64 {
        self.budgets[self.budgets.len() - 1] / p as f64
    }
}

/// Geometric schedule `R_j = decay^{j-1} R_1` for `j < k` with `R_k = R_1`,
/// scaled so the budgets sum to `total_budget` exactly.
pub fn plan_allocation(p: usize, total_budget: f64, decay: f64) -> Result<PrecisionAllocation> {
    if !(decay > 0.5 && decay <= 1.0) {
        return Err(Error::param(format!("decay must lie in (1/2, 1], got {decay}")));
    }
    if !(total_budget > 0.0) {
        return Err(Error::param(format!("total budget must be positive, got {total_budget}")));
    }
    let k = steps_k(p)?;
    let mut weights: Vec<f64> = (0..k - 1).map(|j| decay.powi(j as i32)).collect();
    weights.push(1.0);
    let norm: f64 = weights.iter().sum();
    let r1 = total_budget / norm;
    let budgets = weights.iter().map(|w| w * r1).collect();
    PrecisionAllocation::new(budgets, total_budget)
}

/// Observes `indices` of `signal` sharing `step_budget` equally. Returns the
/// observations aligned with `indices` and the per-observation precision.
pub fn observe<N: NoiseSource + ?Sized>(
    signal: &SparseSignal,
    indices: &[usize],
    step_budget: f64,
    noise: &mut N,
) -> Result<(Vec<f64>, f64)> {
    if indices.is_empty() {
        return Err(Error::param("cannot observe an empty index set"));
    }
    if !(step_budget > 0.0) {
        return Err(Error::param(format!("step budget must be positive, got {step_budget}")));
    }
    let precision = step_budget / indices.len() as f64;
    let sd = precision.sqrt().recip();
    let x = signal.values();
    let ys = indices.iter().map(|&i| x[i] + sd * noise.standard_normal()).collect();
    Ok((ys, precision))
}

/// Keeps the indices whose observation is strictly positive.
pub fn refine(indices: &[usize], observations: &[f64]) -> Vec<usize> {
    debug_assert_eq!(indices.len(), observations.len());
    indices
        .iter()
        .zip(observations)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&i, _)| i)
        .collect()
}

/// One Allocate/Observe step: the retained indices `I_j`, the precision
/// applied to each, and the observations aligned with `indices`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillStep {
    pub indices: Vec<usize>,
    pub precision: f64,
    pub observations: Vec<f64>,
}

impl DistillStep {
    fn empty() -> Self {
        DistillStep { indices: Vec::new(), precision: 0.0, observations: Vec::new() }
    }

    pub fn budget_spent(&self) -> f64 {
        self.indices.len() as f64 * self.precision
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.observations.iter().copied())
    }
}

/// Full record of a Distilled Sensing run.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillTrace {
    pub p: usize,
    pub steps: Vec<DistillStep>,
    pub allocation: PrecisionAllocation,
}

impl DistillTrace {
    /// The last step, whose observations feed the support estimate.
    pub fn final_step(&self) -> &DistillStep {
        self.steps.last().expect("trace has at least one step")
    }

    pub fn budget_spent(&self) -> f64 {
        self.steps.iter().map(DistillStep::budget_spent).sum()
    }

    /// Total number of scalar observations, `sum_j |I_j|`.
    pub fn measurements(&self) -> usize {
        self.steps.iter().map(|s| s.indices.len()).sum()
    }

    /// Errors if the run overspent its budget.
    pub fn check_budget(&self) -> Result<()> {
        check_budget(self.budget_spent(), self.allocation.total_budget())
    }
}

pub(crate) fn check_budget(spent: f64, total: f64) -> Result<()> {
    if spent > total * (1.0 + BUDGET_REL_TOL) {
        Err(Error::BudgetExceeded { spent, total })
    } else {
        Ok(())
    }
}

/// Runs Distilled Sensing on `signal` with the given step budgets.
///
/// Step `j` spreads `R_j` over the indices retained so far, observes them,
/// and keeps only positive observations for step `j + 1`. No refinement
/// follows the last step. Once the retained set is empty the remaining steps
/// are recorded empty and spend nothing.
pub fn run_distilled_sensing<N: NoiseSource + ?Sized>(
    signal: &SparseSignal,
    allocation: &PrecisionAllocation,
    noise: &mut N,
) -> Result<DistillTrace> {
    let p = signal.len();
    if p == 0 {
        return Err(Error::param("signal is empty"));
    }
    let k = allocation.steps();
    let mut steps = Vec::with_capacity(k);
    let mut current: Vec<usize> = (0..p).collect();
    for j in 0..k {
        if current.is_empty() {
            steps.push(DistillStep::empty());
            continue;
        }
        let (observations, precision) = observe(signal, &current, allocation.budgets()[j], noise)?;
        let next = if j + 1 < k { refine(&current, &observations) } else { Vec::new() };
        steps.push(DistillStep { indices: std::mem::replace(&mut current, next), precision, observations });
    }
    let trace = DistillTrace { p, steps, allocation: allocation.clone() };
    trace.check_budget()?;
    Ok(trace)
}

/// A single unit-precision look at every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct NonAdaptiveObservation {
    pub observations: Vec<f64>,
}

impl NonAdaptiveObservation {
    /// Every coordinate is observed once with precision one.
    pub fn budget_spent(&self) -> f64 {
        self.observations.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.observations.iter().copied().enumerate()
    }
}

/// `y_i = x_i + w_i` for every coordinate.
pub fn run_nonadaptive<N: NoiseSource + ?Sized>(signal: &SparseSignal, noise: &mut N) -> NonAdaptiveObservation {
    let observations = signal.values().iter().map(|&x| x + noise.standard_normal()).collect();
    NonAdaptiveObservation { observations }
}
