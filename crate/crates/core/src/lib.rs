//! Distilled Sensing: adaptive sampling for sparse nonnegative signals in
//! Gaussian noise.
//!
//! A Distilled Sensing run spends a fixed precision budget over a few
//! observation steps. Each step spreads its share of the budget over the
//! coordinates still in play, observes them, and discards every coordinate
//! whose observation was not positive. Nulls are halved at each step while
//! signal coordinates survive, so later steps see far fewer coordinates at
//! much higher precision.
//!
//! The crate provides the sampling loop and the non-adaptive baseline
//! ([`sensing`]), support estimators ([`estimators`]), FDP/NDP metrics
//! ([`metrics`]), closed-form tail bounds ([`bounds`]) and a seeded Monte
//! Carlo harness that writes CSV ([`harness`]).
//!
//! ```
//! use distilled_sensing::{plan_allocation, run_distilled_sensing, ds_support_estimate, SparseSignal};
//! use rand::SeedableRng;
//!
//! let p = 1 << 12;
//! let signal = SparseSignal::from_support(p, vec![3, 70, 900], 4.0).unwrap();
//! let alloc = plan_allocation(p, p as f64, 0.75).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let trace = run_distilled_sensing(&signal, &alloc, &mut rng).unwrap();
//! assert!(trace.budget_spent() <= p as f64 * (1.0 + 1e-9));
//! let estimate = ds_support_estimate(&trace);
//! assert!(estimate.indices.iter().all(|i| trace.final_step().indices.contains(i)));
//! ```

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod sensing;
pub mod signal;

pub use bounds::{
    binomial_lower_tail_bound, default_epsilon, detection_boundary_rho, ds_success_prob_bound, epsilon_j,
    gaussian_tail_bounds, limit_lemma_check, min_detect_amplitude, null_retention_bound, product_lower_bound,
    signal_retention_bound, BoundReport,
};
pub use error::{Error, Result};
pub use estimators::{ds_support_estimate, detect, nonadaptive_threshold, threshold_support, SupportEstimate};
pub use metrics::{aggregate, fdp, ndp, Aggregate, TrialMetrics};
pub use rng::{NoiseSource, ZeroNoise};
pub use sensing::{
    observe, plan_allocation, refine, run_distilled_sensing, run_nonadaptive, steps_k, DistillStep, DistillTrace,
    NonAdaptiveObservation, PrecisionAllocation,
};
pub use signal::{amplitude_from_r, generate_sparse_signal, sparsity_from_beta, SignalParams, SparseSignal};
