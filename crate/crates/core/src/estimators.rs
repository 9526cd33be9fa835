//! Support estimates and detection decisions.

use crate::error::{Error, Result};
use crate::sensing::DistillTrace;

/// An estimated support set together with the threshold that produced it.
/// `indices` is sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportEstimate {
    pub indices: Vec<usize>,
    pub threshold: f64,
}

impl SupportEstimate {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Coordinate-wise thresholding: every index with `y_i >= tau`.
pub fn threshold_support<I>(observations: I, tau: f64) -> Result<SupportEstimate>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    if !(tau > 0.0) {
        return Err(Error::param(format!("threshold must be positive, got {tau}")));
    }
    let mut indices: Vec<usize> = observations.into_iter().filter(|&(_, y)| y >= tau).map(|(i, _)| i).collect();
    indices.sort_unstable();
    Ok(SupportEstimate { indices, threshold: tau })
}

/// Detection threshold `sqrt(2 / c_k)` applied to the final distillation step.
pub fn ds_threshold(trace: &DistillTrace) -> f64 {
    (2.0 / trace.allocation.last_fraction(trace.p)).sqrt()
}

/// The DS support estimate: final-step indices whose observation strictly
/// exceeds `sqrt(2 / c_k)`, with `c_k = R_k / p`.
pub fn ds_support_estimate(trace: &DistillTrace) -> SupportEstimate {
    let tau = ds_threshold(trace);
    let mut indices: Vec<usize> = trace.final_step().iter().filter(|&(_, y)| y > tau).map(|(i, _)| i).collect();
    indices.sort_unstable();
    SupportEstimate { indices, threshold: tau }
}

/// Declares a signal present iff the DS support estimate is nonempty.
pub fn detect(trace: &DistillTrace) -> bool {
    !ds_support_estimate(trace).is_empty()
}

/// Non-adaptive threshold `sqrt(2 alpha ln p)` for the recoverable regime
/// `r > beta`, with `alpha = (beta + r) / 2`.
pub fn nonadaptive_threshold(p: f64, r: f64, beta: f64) -> Result<f64> {
    nonadaptive_threshold_with_alpha(p, r, beta, 0.5 * (beta + r))
}

/// As [`nonadaptive_threshold`] with an explicit `alpha` in `(beta, r)`.
pub fn nonadaptive_threshold_with_alpha(p: f64, r: f64, beta: f64, alpha: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(r > beta) {
        return Err(Error::param(format!(
            "r = {r} <= beta = {beta}: no coordinate-wise threshold recovers the support in this regime"
        )));
    }
    if !(alpha > beta && alpha < r) {
        return Err(Error::param(format!("alpha must lie in (beta, r) = ({beta}, {r}), got {alpha}")));
    }
    if !(p > 1.0) {
        return Err(Error::param(format!("p must exceed 1, got {p}")));
    }
    Ok((2.0 * alpha * p.ln()).sqrt())
}
