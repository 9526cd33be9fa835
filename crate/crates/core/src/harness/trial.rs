use crate::error::{Error, Result};
use crate::estimators::{ds_support_estimate, nonadaptive_threshold, threshold_support};
use crate::harness::config::{ExperimentConfig, Method};
use crate::metrics::TrialMetrics;
use crate::rng::{trial_rng, Phase, StreamTag};
use crate::sensing::{check_budget, plan_allocation, run_distilled_sensing, run_nonadaptive, DistillTrace, NonAdaptiveObservation};
use crate::signal::{generate_sparse_signal, SignalParams, SparseSignal};

/// Points in the default per-trial threshold grid.
pub const DEFAULT_GRID_POINTS: usize = 200;

#[derive(Debug, Clone)]
pub struct DsOutcome {
    pub trace: DistillTrace,
    pub metrics: TrialMetrics,
}

#[derive(Debug, Clone)]
pub struct NonAdaptiveOutcome {
    pub observation: NonAdaptiveObservation,
    /// Threshold the metrics were computed at.
    pub threshold: f64,
    pub metrics: TrialMetrics,
}

/// Everything one trial produced.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial_index: u64,
    pub signal: SparseSignal,
    pub ds: Option<DsOutcome>,
    pub nonadaptive: Option<NonAdaptiveOutcome>,
}

impl TrialOutcome {
    pub fn metrics(&self, method: Method) -> Option<&TrialMetrics> {
        match method {
            Method::Ds => self.ds.as_ref().map(|o| &o.metrics),
            Method::Nonadaptive => self.nonadaptive.as_ref().map(|o| &o.metrics),
            Method::Both => None,
        }
    }

    /// Observations a threshold is applied to: final-step DS observations or
    /// the full non-adaptive vector.
    pub fn scored(&self, method: Method) -> Option<ScoredObservations> {
        match method {
            Method::Ds => self.ds.as_ref().map(|o| ScoredObservations::new(o.trace.final_step().iter(), &self.signal)),
            Method::Nonadaptive => {
                self.nonadaptive.as_ref().map(|o| ScoredObservations::new(o.observation.iter(), &self.signal))
            }
            Method::Both => None,
        }
    }
}

/// Raw observations of one method on one trial, without metrics.
pub(crate) struct RawTrial {
    pub signal: SparseSignal,
    pub ds: Option<DistillTrace>,
    pub nonadaptive: Option<NonAdaptiveObservation>,
}

pub(crate) fn simulate(config: &ExperimentConfig, phase: Phase, trial_index: u64) -> Result<RawTrial> {
    let p = config.p;
    let params = SignalParams::new(p, config.num_nonzero()?, config.amplitude())?;
    let seed = config.master_seed;
    let signal = generate_sparse_signal(&params, &mut trial_rng(seed, phase, trial_index, StreamTag::Signal))?;

    let ds_tag = StreamTag::DistilledNoise;
    let na_tag = if config.common_noise { ds_tag } else { StreamTag::NonAdaptiveNoise };
    let methods = config.method.expand();

    let ds = if methods.contains(&Method::Ds) {
        let alloc = plan_allocation(p, p as f64, config.decay)?;
        let trace = run_distilled_sensing(&signal, &alloc, &mut trial_rng(seed, phase, trial_index, ds_tag))?;
        check_budget(trace.budget_spent(), p as f64)?;
        Some(trace)
    } else {
        None
    };
    let nonadaptive = if methods.contains(&Method::Nonadaptive) {
        let obs = run_nonadaptive(&signal, &mut trial_rng(seed, phase, trial_index, na_tag));
        check_budget(obs.budget_spent(), p as f64)?;
        Some(obs)
    } else {
        None
    };
    log::trace!(
        "trial {trial_index}: ds budget {:?}, nonadaptive budget {:?}, cap {p}",
        ds.as_ref().map(DistillTrace::budget_spent),
        nonadaptive.as_ref().map(NonAdaptiveObservation::budget_spent)
    );
    Ok(RawTrial { signal, ds, nonadaptive })
}

/// Runs one evaluation trial: draws a fresh signal and noise from seeds
/// derived from `(master_seed, trial_index)` and evaluates each requested
/// method at its default threshold.
///
/// DS uses its own `sqrt(2/c_k)` rule. The non-adaptive baseline uses
/// `sqrt(2 alpha ln p)` when `r > beta`; otherwise no fixed threshold is
/// known to work and the best point of the trial's threshold grid (smallest
/// `max(FDP, NDP)`) is reported.
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialOutcome> {
    config.validate()?;
    run_trial_in(config, Phase::Evaluation, trial_index)
}

pub(crate) fn run_trial_in(config: &ExperimentConfig, phase: Phase, trial_index: u64) -> Result<TrialOutcome> {
    let raw = simulate(config, phase, trial_index)?;
    let p = config.p;
    let ds = raw.ds.map(|trace| {
        let est = ds_support_estimate(&trace);
        let metrics = TrialMetrics::evaluate(&est, &raw.signal, trace.measurements(), trace.budget_spent());
        DsOutcome { trace, metrics }
    });
    let nonadaptive = match raw.nonadaptive {
        Some(observation) => {
            let threshold = match config.beta() {
                Some(beta) if beta > 0.0 && beta < 1.0 && config.r() > beta => {
                    nonadaptive_threshold(p as f64, config.r(), beta)?
                }
                _ => {
                    let scored = ScoredObservations::new(observation.iter(), &raw.signal);
                    let grid = match &config.threshold_grid {
                        Some(g) => g.clone(),
                        None => scored.default_grid(DEFAULT_GRID_POINTS),
                    };
                    scored.best_minimax(&grid).0
                }
            };
            let est = threshold_support(observation.iter(), threshold)?;
            let metrics = TrialMetrics::evaluate(&est, &raw.signal, p, observation.budget_spent());
            Some(NonAdaptiveOutcome { observation, threshold, metrics })
        }
        None => None,
    };
    Ok(TrialOutcome { trial_index, signal: raw.signal, ds, nonadaptive })
}

/// Observations sorted in decreasing order with support labels, so FDP and
/// NDP at any threshold cost one binary search.
#[derive(Debug, Clone)]
pub struct ScoredObservations {
    values: Vec<f64>,
    /// `nulls_prefix[n]` is the number of nulls among the `n` largest values.
    nulls_prefix: Vec<u32>,
    num_signal: usize,
    /// Thresholds below this value are not represented exactly.
    floor: f64,
}

impl ScoredObservations {
    pub fn new<I: IntoIterator<Item = (usize, f64)>>(obs: I, truth: &SparseSignal) -> Self {
        Self::truncated(obs, truth, usize::MAX)
    }

    /// Keeps only the `keep` largest observations; counts stay exact for
    /// thresholds at or above [`ScoredObservations::floor`].
    pub fn truncated<I: IntoIterator<Item = (usize, f64)>>(obs: I, truth: &SparseSignal, keep: usize) -> Self {
        let mut pairs: Vec<(f64, bool)> = obs.into_iter().map(|(i, y)| (y, truth.in_support(i))).collect();
        pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
        let floor = if pairs.len() > keep {
            pairs.truncate(keep);
            pairs.last().map_or(f64::NEG_INFINITY, |p| p.0)
        } else {
            f64::NEG_INFINITY
        };
        let mut nulls_prefix = Vec::with_capacity(pairs.len() + 1);
        nulls_prefix.push(0);
        let mut acc = 0u32;
        for &(_, sig) in &pairs {
            acc += u32::from(!sig);
            nulls_prefix.push(acc);
        }
        ScoredObservations {
            values: pairs.into_iter().map(|p| p.0).collect(),
            nulls_prefix,
            num_signal: truth.support().len(),
            floor,
        }
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn max(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// `(declared, false discoveries)` for the rule `y >= tau`.
    pub fn counts_at(&self, tau: f64) -> (usize, usize) {
        let declared = self.values.partition_point(|&y| y >= tau);
        (declared, self.nulls_prefix[declared] as usize)
    }

    /// FDP and NDP of `{i : y_i >= tau}` with the empty-set conventions.
    pub fn fdp_ndp(&self, tau: f64) -> (f64, f64) {
        let (declared, false_hits) = self.counts_at(tau);
        let fdp = if declared == 0 { 0.0 } else { false_hits as f64 / declared as f64 };
        let ndp = if self.num_signal == 0 {
            0.0
        } else {
            (self.num_signal - (declared - false_hits)) as f64 / self.num_signal as f64
        };
        (fdp, ndp)
    }

    /// Evenly spaced thresholds spanning the positive part of the observed
    /// range: from `max(min, max / n)` up to `max`. Falls back to
    /// `1/n, 2/n, .., 1` when nothing is positive.
    pub fn default_grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) if hi > 0.0 => {
                let lo = if lo > 0.0 { lo } else { hi / n as f64 };
                if n == 1 {
                    return vec![hi];
                }
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
            _ => (1..=n).map(|i| i as f64 / n as f64).collect(),
        }
    }

    /// Grid threshold minimizing `max(FDP, NDP)`; ties go to the smaller
    /// threshold. Returns `(tau, fdp, ndp)`.
    pub fn best_minimax(&self, grid: &[f64]) -> (f64, f64, f64) {
        let mut best = (f64::NAN, 1.0, 1.0);
        let mut best_score = f64::INFINITY;
        for &tau in grid {
            let (f, n) = self.fdp_ndp(tau);
            if f.max(n) < best_score {
                best_score = f.max(n);
                best = (tau, f, n);
            }
        }
        best
    }
}

pub(crate) fn require_single(method: Method) -> Result<()> {
    if method == Method::Both {
        return Err(Error::param("this operation needs a single method, not both"));
    }
    Ok(())
}
