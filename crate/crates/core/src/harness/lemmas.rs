//! Monte Carlo and numeric checks of the tail bounds in [`crate::bounds`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};
use statrs::function::erf::erfc;

use crate::bounds::{
    binomial_lower_tail_bound, ds_success_prob_bound, gaussian_tail_bounds, limit_lemma_check,
    null_retention_bound, product_lower_bound, retention_envelope, signal_retention_bound,
};
use crate::error::Result;
use crate::rng::{derive_seed, trial_rng, NoiseSource, Phase, StreamTag};
use crate::sensing::{plan_allocation, run_distilled_sensing, DEFAULT_DECAY};
use crate::signal::{generate_sparse_signal, SignalParams};

/// Parameters of [`validate_lemmas`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSuiteConfig {
    pub seed: u64,
    pub null_m: usize,
    pub null_eps: f64,
    pub null_replicates: usize,
    /// Allowed excess of the empirical violation rate over the bound.
    pub null_slack: f64,
    pub signal_mu: f64,
    pub signal_sigma: f64,
    pub signal_m: usize,
    pub signal_replicates: usize,
    pub signal_slack: f64,
    pub chernoff_triples: usize,
    pub distill_p: usize,
    pub distill_s: usize,
    pub distill_mu: f64,
    pub distill_eps: f64,
    pub distill_runs: usize,
    pub distill_slack: f64,
}

impl Default for LemmaSuiteConfig {
    fn default() -> Self {
        LemmaSuiteConfig {
            seed: 0,
            null_m: 10_000,
            null_eps: 0.02,
            null_replicates: 10_000,
            null_slack: 0.004,
            signal_mu: 2.0,
            signal_sigma: 1.0,
            signal_m: 1_000,
            signal_replicates: 10_000,
            signal_slack: 0.01,
            chernoff_triples: 100,
            distill_p: 1 << 14,
            distill_s: 128,
            // Smallest round amplitude for which every step budget of the
            // default plan meets the retention requirement.
            distill_mu: 4.5,
            distill_eps: 0.05,
            distill_runs: 500,
            distill_slack: 0.02,
        }
    }
}

/// Outcome of one check: the bound, the measured quantity it governs, and
/// whether the measurement respected the bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub lemma: String,
    pub params: String,
    pub bound: f64,
    pub empirical: f64,
    pub pass: bool,
}

fn check(lemma: &str, params: String, bound: f64, empirical: f64, pass: bool) -> LemmaCheck {
    LemmaCheck { lemma: lemma.to_owned(), params, bound, empirical, pass }
}

fn aux_rng(seed: u64, check: u32, replicate: u64) -> ChaCha8Rng {
    trial_rng(seed, Phase::Evaluation, replicate, StreamTag::Auxiliary(check))
}

/// Null halving: fraction of replicates where the count of positive draws
/// among `m` centered Gaussians leaves `[(1/2-eps)m, (1/2+eps)m]`, against
/// `2 exp(-2 m eps^2)`.
fn null_halving(cfg: &LemmaSuiteConfig) -> Result<LemmaCheck> {
    let (m, eps) = (cfg.null_m, cfg.null_eps);
    let bound = 1.0 - null_retention_bound(m, eps)?;
    let violations: usize = (0..cfg.null_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = aux_rng(cfg.seed, 1, r);
            let kept = (0..m).filter(|_| rng.standard_normal() > 0.0).count() as f64;
            let mf = m as f64;
            usize::from(kept < (0.5 - eps) * mf || kept > (0.5 + eps) * mf)
        })
        .sum();
    let freq = violations as f64 / cfg.null_replicates as f64;
    Ok(check(
        "null_halving",
        format!("m={m};eps={eps};replicates={}", cfg.null_replicates),
        bound,
        freq,
        freq <= bound + cfg.null_slack,
    ))
}

/// Signal retention: fraction of replicates where fewer than
/// `(1 - eps') m` of `N(mu, sigma^2)` draws are positive.
fn signal_retention(cfg: &LemmaSuiteConfig) -> Result<LemmaCheck> {
    let (m, mu, sigma) = (cfg.signal_m, cfg.signal_mu, cfg.signal_sigma);
    let ret = signal_retention_bound(m, mu, sigma)?;
    let bound = 1.0 - ret.prob.value;
    let floor = (1.0 - ret.eps_prime) * m as f64;
    let violations: usize = (0..cfg.signal_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = aux_rng(cfg.seed, 2, r);
            let kept = (0..m).filter(|_| mu + sigma * rng.standard_normal() > 0.0).count() as f64;
            usize::from(kept < floor)
        })
        .sum();
    let freq = violations as f64 / cfg.signal_replicates as f64;
    Ok(check(
        "signal_retention",
        format!("m={m};mu={mu};sigma={sigma};replicates={}", cfg.signal_replicates),
        bound,
        freq,
        ret.prob.valid && freq <= bound + cfg.signal_slack,
    ))
}

/// Chernoff bound against the exact binomial CDF at the reference point and
/// on random `(m, q, b)` triples. Reports the triple with the smallest margin.
fn chernoff(cfg: &LemmaSuiteConfig) -> Result<LemmaCheck> {
    let mut rng = aux_rng(cfg.seed, 3, 0);
    let mut triples = vec![(10usize, 0.9f64, 5.0f64)];
    while triples.len() < cfg.chernoff_triples + 1 {
        let m = rng.random_range(1..=200usize);
        let q = rng.random_range(0.05..0.99);
        let b = rng.random_range(0.0..1.0) * m as f64 * q;
        if b > 0.0 {
            triples.push((m, q, b));
        }
    }
    let mut worst = (f64::INFINITY, 0.0, 0.0, (0, 0.0, 0.0));
    let mut pass = true;
    for &(m, q, b) in &triples {
        let bound = binomial_lower_tail_bound(m, q, b)?;
        let exact = Binomial::new(q, m as u64).expect("valid binomial").cdf(b.floor() as u64);
        pass &= bound >= exact * (1.0 - 1e-12);
        if bound - exact < worst.0 {
            worst = (bound - exact, bound, exact, (m, q, b));
        }
    }
    let (m, q, b) = worst.3;
    Ok(check(
        "chernoff_binomial",
        format!("triples={};worst_m={m};worst_q={q:.4};worst_b={b:.4}", triples.len()),
        worst.1,
        worst.2,
        pass,
    ))
}

/// Gaussian tail sandwich for `gamma` on a grid over `[1.01, 6]`.
fn gaussian_tail() -> Result<LemmaCheck> {
    let n = 500;
    let mut pass = true;
    let mut worst = (f64::INFINITY, 0.0, 0.0, 0.0);
    for i in 0..=n {
        let g = 1.01 + (6.0 - 1.01) * i as f64 / n as f64;
        let (lo, hi) = gaussian_tail_bounds(g)?;
        let exact = 0.5 * erfc(g / std::f64::consts::SQRT_2);
        pass &= lo <= exact && exact <= hi;
        let margin = ((exact - lo) / exact).min((hi - exact) / exact);
        if margin < worst.0 {
            worst = (margin, if exact - lo < hi - exact { lo } else { hi }, exact, g);
        }
    }
    Ok(check("gaussian_tail", format!("grid=1.01..6;points={};worst_gamma={:.4}", n + 1, worst.3), worst.1, worst.2, pass))
}

/// Product bound at `a = 2, g = 4, k = 10` against the exact product.
fn product_reference() -> Result<LemmaCheck> {
    let (a, g, k) = (2.0f64, 4.0, 10);
    let bound = product_lower_bound(a, g, k)?;
    let exact: f64 = (1..=k).map(|j| 1.0 - a.powi(-(j as i32)) / g).product();
    Ok(check("product_bound", format!("a={a};g={g};k={k}"), bound, exact, exact >= bound))
}

/// Product bound on a grid of `(a, g, k)`.
fn product_grid() -> Result<LemmaCheck> {
    let mut pass = true;
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    let mut count = 0;
    for a in [1.1, 1.5, 2.0, 3.0, 10.0] {
        for g in [1.0, 1.5, 2.0, 4.0, 16.0, 1e3] {
            if g <= (1.0 + 1e-6) / a {
                continue;
            }
            for k in [1, 2, 5, 10, 40] {
                let bound = product_lower_bound(a, g, k)?;
                let exact: f64 = (1..=k).map(|j| 1.0 - a.powi(-(j as i32)) / g).product();
                pass &= exact >= bound;
                count += 1;
                if exact - bound < worst.0 {
                    worst = (exact - bound, bound, exact);
                }
            }
        }
    }
    Ok(check("product_bound_grid", format!("cases={count}"), worst.1, worst.2, pass))
}

/// Limit sandwich on a random grid of `(f, g)` with `f g <= 10`.
fn limit_sandwich(cfg: &LemmaSuiteConfig) -> Result<LemmaCheck> {
    let mut rng = aux_rng(cfg.seed, 4, 0);
    let mut pass = true;
    let mut cases = 0;
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    while cases < 1000 {
        let f = rng.random_range(0.0..=0.5);
        let g = rng.random_range(0.0..100.0);
        if f * g > 10.0 {
            continue;
        }
        cases += 1;
        let (upper, lower) = limit_lemma_check(f, g)?;
        let plus = (1.0 + f).powf(g);
        let minus = (1.0 - f).powf(g);
        pass &= plus <= upper * (1.0 + 1e-12) && minus >= lower * (1.0 - 1e-12);
        if minus - lower < worst.0 {
            worst = (minus - lower, lower, minus);
        }
    }
    Ok(check("limit_sandwich", format!("cases={cases};fg<=10"), worst.1, worst.2, pass))
}

/// Runs DS with the default plan and counts how often every step's signal
/// and null counts stay inside their retention envelopes.
fn distillation_envelope(cfg: &LemmaSuiteConfig) -> Result<LemmaCheck> {
    let (p, s, mu, eps) = (cfg.distill_p, cfg.distill_s, cfg.distill_mu, cfg.distill_eps);
    let alloc = plan_allocation(p, p as f64, DEFAULT_DECAY)?;
    let z1 = p - s;
    let report = ds_success_prob_bound(s, z1, eps, mu, alloc.budgets())?;
    let envelope = retention_envelope(s, z1, eps, mu, alloc.budgets());
    let params = SignalParams::new(p, s, mu)?;
    let hits: usize = (0..cfg.distill_runs as u64)
        .into_par_iter()
        .map(|r| -> Result<usize> {
            let seed = derive_seed(cfg.seed, Phase::Evaluation, r, StreamTag::Auxiliary(5));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let signal = generate_sparse_signal(&params, &mut rng)?;
            let trace = run_distilled_sensing(&signal, &alloc, &mut rng)?;
            let inside = envelope.iter().all(|env| {
                let step = &trace.steps[env.step - 1];
                let sj = step.indices.iter().filter(|&&i| signal.in_support(i)).count() as f64;
                let zj = step.indices.len() as f64 - sj;
                sj >= env.signal_lower && zj >= env.null_lower && zj <= env.null_upper
            });
            Ok(usize::from(inside))
        })
        .sum::<Result<usize>>()?;
    let freq = hits as f64 / cfg.distill_runs as f64;
    Ok(check(
        "distillation_envelope",
        format!("p={p};s={s};mu={mu};eps={eps};runs={}", cfg.distill_runs),
        report.value,
        freq,
        report.valid && freq >= report.clamped() - cfg.distill_slack,
    ))
}

/// Runs every check. Checks are independent and seeded from `cfg.seed`.
pub fn validate_lemmas(cfg: &LemmaSuiteConfig) -> Result<Vec<LemmaCheck>> {
    let checks = vec![
        null_halving(cfg)?,
        signal_retention(cfg)?,
        chernoff(cfg)?,
        gaussian_tail()?,
        product_reference()?,
        product_grid()?,
        limit_sandwich(cfg)?,
        distillation_envelope(cfg)?,
    ];
    for c in &checks {
        log::info!("{}: bound={} empirical={} pass={}", c.lemma, c.bound, c.empirical, c.pass);
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_suite_passes() {
        let cfg = LemmaSuiteConfig {
            null_replicates: 500,
            signal_replicates: 500,
            distill_runs: 100,
            distill_slack: 0.1,
            ..Default::default()
        };
        let checks = validate_lemmas(&cfg).unwrap();
        assert_eq!(checks.len(), 8);
        for c in &checks {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn violated_bound_fails() {
        // mu < 2 sigma breaks the retention precondition.
        let cfg = LemmaSuiteConfig { signal_mu: 1.0, signal_replicates: 50, ..Default::default() };
        assert!(!signal_retention(&cfg).unwrap().pass);
    }
}
