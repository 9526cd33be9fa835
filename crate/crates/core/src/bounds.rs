//! Closed-form tail bounds and boundaries used to check the simulations.
//!
//! Probability bounds return their raw value; a bound below zero is vacuous
//! rather than wrong, so [`BoundReport`] keeps the raw value and clamps only
//! on request.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// A bound value plus whether its preconditions held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub value: f64,
    pub valid: bool,
    /// First one-based step whose precondition failed, if any.
    pub failing_step: Option<usize>,
}

impl BoundReport {
    fn ok(value: f64) -> Self {
        BoundReport { value, valid: true, failing_step: None }
    }

    pub fn clamped(&self) -> f64 {
        self.value.clamp(0.0, 1.0)
    }
}

/// Default slack `eps = p^{-1/3}` for evaluating the distillation bounds.
pub fn default_epsilon(p: usize) -> f64 {
    (p as f64).powf(-1.0 / 3.0)
}

/// Mills-ratio sandwich on `Pr(Z > gamma)` for standard normal `Z`:
/// `phi(gamma)/gamma * (1 - 1/gamma^2) <= Pr(Z > gamma) <= phi(gamma)/gamma`.
///
/// The lower bound is negative (vacuous) for `gamma < 1`.
pub fn gaussian_tail_bounds(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0) {
        return Err(Error::param(format!("gamma must be positive, got {gamma}")));
    }
    let upper = (-0.5 * gamma * gamma).exp() / (2.0 * PI * gamma * gamma).sqrt();
    let lower = upper * (1.0 - 1.0 / (gamma * gamma));
    Ok((lower, upper))
}

/// Lower bound `1 - 2 exp(-2 m eps^2)` on the probability that between
/// `(1/2 - eps) m` and `(1/2 + eps) m` of `m` centered Gaussians are positive.
pub fn null_retention_bound(m: usize, eps: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    Ok(1.0 - 2.0 * (-2.0 * m as f64 * eps * eps).exp())
}

/// Retention guarantee for `m` observations drawn from `N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalRetention {
    /// Lost fraction `sigma / (mu sqrt(2 pi))`.
    pub eps_prime: f64,
    /// Probability that at least `(1 - eps_prime) m` stay positive.
    pub prob: BoundReport,
}

/// Requires `mu >= 2 sigma` for the guarantee to hold; otherwise the report is
/// returned with `valid = false`.
pub fn signal_retention_bound(m: usize, mu: f64, sigma: f64) -> Result<SignalRetention> {
    if !(sigma > 0.0) || !(mu > 0.0) {
        return Err(Error::param(format!("need mu > 0 and sigma > 0, got mu={mu}, sigma={sigma}")));
    }
    let root = (2.0 * PI).sqrt();
    let eps_prime = sigma / (mu * root);
    let value = 1.0 - (-mu * m as f64 / (4.0 * sigma * root)).exp();
    let valid = mu >= 2.0 * sigma;
    Ok(SignalRetention { eps_prime, prob: BoundReport { value, valid, failing_step: None } })
}

/// Chernoff bound on `Pr(Bin(m, q) <= b)` for `0 < b < m q`:
/// `((m - m q)/(m - b))^(m - b) * (m q / b)^b`.
pub fn binomial_lower_tail_bound(m: usize, q: f64, b: f64) -> Result<f64> {
    let mf = m as f64;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!("q must lie in (0, 1], got {q}")));
    }
    let mean = mf * q;
    if !(b > 0.0 && b < mean) {
        return Err(Error::param(format!("need 0 < b < m q = {mean}, got b = {b}")));
    }
    let log_val = (mf - b) * ((mf - mean) / (mf - b)).ln() + b * (mean / b).ln();
    Ok(log_val.exp())
}

/// `eps_j = sqrt((s1 + (1/2 + eps)^(j-1) z1) / (2 pi mu^2 R_j))` for a
/// one-based step `j`.
pub fn epsilon_j(s1: usize, z1: usize, eps: f64, mu: f64, r_j: f64, j: usize) -> f64 {
    let retained = s1 as f64 + (0.5 + eps).powi(j as i32 - 1) * z1 as f64;
    (retained / (2.0 * PI * mu * mu * r_j)).sqrt()
}

/// Per-step bounds on the retained signal and null counts after refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetentionEnvelope {
    /// One-based step whose starting counts are bounded (`j = 2..k`).
    pub step: usize,
    pub signal_lower: f64,
    pub null_lower: f64,
    pub null_upper: f64,
}

/// Envelopes `prod_{l<j}(1 - eps_l) s1 <= s_j` and
/// `(1/2 - eps)^(j-1) z1 <= z_j <= (1/2 + eps)^(j-1) z1` for `j = 2..k`.
pub fn retention_envelope(s1: usize, z1: usize, eps: f64, mu: f64, budgets: &[f64]) -> Vec<RetentionEnvelope> {
    let k = budgets.len();
    let mut prod = 1.0;
    (2..=k)
        .map(|j| {
            if s1 > 0 {
                prod *= 1.0 - epsilon_j(s1, z1, eps, mu, budgets[j - 2], j - 1);
            }
            let e = (j - 1) as i32;
            RetentionEnvelope {
                step: j,
                signal_lower: prod * s1 as f64,
                null_lower: (0.5 - eps).powi(e) * z1 as f64,
                null_upper: (0.5 + eps).powi(e) * z1 as f64,
            }
        })
        .collect()
}

/// Lower bound on the probability that every retention envelope holds over a
/// whole distillation run with step budgets `budgets`.
///
/// With signal present each of the first `k - 1` budgets must satisfy
/// `R_j > 4/mu^2 (s1 + (1/2 + eps)^(j-1) z1)`; the first failing step is
/// reported and the report marked invalid.
pub fn ds_success_prob_bound(s1: usize, z1: usize, eps: f64, mu: f64, budgets: &[f64]) -> Result<BoundReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if budgets.is_empty() {
        return Err(Error::param("need at least one step budget"));
    }
    let k = budgets.len();
    let z1f = z1 as f64;
    let null_term: f64 = (1..k)
        .map(|j| 2.0 * (-2.0 * z1f * (0.5 - eps).powi(j as i32 - 1) * eps * eps).exp())
        .sum();
    if s1 == 0 {
        return Ok(BoundReport::ok(1.0 - null_term));
    }
    if !(mu > 0.0) {
        return Err(Error::param(format!("mu must be positive when signal is present, got {mu}")));
    }

    let failing_step = (1..k).find(|&j| {
        let need = 4.0 / (mu * mu) * (s1 as f64 + (0.5 + eps).powi(j as i32 - 1) * z1f);
        !(budgets[j - 1] > need)
    });

    let root = (2.0 * PI).sqrt();
    let mut prod = 1.0;
    let mut signal_term = 0.0;
    for j in 1..k {
        signal_term += (-(s1 as f64) * prod / (2.0 * root)).exp();
        prod *= 1.0 - epsilon_j(s1, z1, eps, mu, budgets[j - 1], j);
    }
    Ok(BoundReport { value: 1.0 - signal_term - null_term, valid: failing_step.is_none(), failing_step })
}

/// Non-adaptive detection boundary `rho(beta)`.
pub fn detection_boundary_rho(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(if beta <= 0.5 {
        0.0
    } else if beta <= 0.75 {
        beta - 0.5
    } else {
        (1.0 - (1.0 - beta).sqrt()).powi(2)
    })
}

/// Constant amplitude above which DS detection succeeds asymptotically:
/// `max(sqrt(4/c1), 2 sqrt(2/ck))`.
pub fn min_detect_amplitude(c1: f64, ck: f64) -> Result<f64> {
    if !(c1 > 0.0 && c1 <= 1.0 && ck > 0.0 && ck <= 1.0) {
        return Err(Error::param(format!("budget fractions must lie in (0, 1], got c1={c1}, ck={ck}")));
    }
    Ok((4.0 / c1).sqrt().max(2.0 * (2.0 / ck).sqrt()))
}

/// Lower bound on `prod_{j=1..k} (1 - a^{-j}/g)`:
/// `exp(-1/(g - 1/a) * a^{-1}(1 - a^{-k})/(1 - a^{-1}))`.
pub fn product_lower_bound(a: f64, g: f64, k: usize) -> Result<f64> {
    const ETA: f64 = 1e-6;
    if !(a > 1.0) {
        return Err(Error::param(format!("a must exceed 1, got {a}")));
    }
    let inv = 1.0 / a;
    if !(g > inv * (1.0 + ETA)) {
        return Err(Error::param(format!("g must exceed 1/a, got g={g}, 1/a={inv}")));
    }
    let geom = inv * (1.0 - inv.powi(k as i32)) / (1.0 - inv);
    Ok((-geom / (g - inv)).exp())
}

/// Sandwich used for limits of `(1 +/- f)^g`: returns `(exp(f g), exp(-2 f g))`,
/// which bound `(1 + f)^g` from above and `(1 - f)^g` from below.
pub fn limit_lemma_check(f: f64, g: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.5).contains(&f) {
        return Err(Error::param(format!("f must lie in [0, 1/2], got {f}")));
    }
    if !(g >= 0.0) {
        return Err(Error::param(format!("g must be nonnegative, got {g}")));
    }
    Ok(((f * g).exp(), (-2.0 * f * g).exp()))
}
