//! Sparse nonnegative signals with uniformly placed support.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension, support size and common amplitude of a sparse signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    pub p: usize,
    pub num_nonzero: usize,
    pub amplitude: f64,
}

impl SignalParams {
    pub fn new(p: usize, num_nonzero: usize, amplitude: f64) -> Result<Self> {
        let params = SignalParams { p, num_nonzero, amplitude };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::param("signal dimension p must be at least 1"));
        }
        if self.num_nonzero > self.p {
            return Err(Error::param(format!(
                "num_nonzero {} exceeds dimension {}",
                self.num_nonzero, self.p
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::param(format!(
                "amplitude must be finite and nonnegative, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// A length-`p` signal whose entries equal `amplitude` on `support` and zero
/// elsewhere. Indices are zero-based and `support` is sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: Vec<f64>,
    support: Vec<usize>,
    amplitude: f64,
}

impl SparseSignal {
    /// Builds a signal from an explicit support. Duplicate or out-of-range
    /// indices are rejected.
    pub fn from_support(p: usize, mut support: Vec<usize>, amplitude: f64) -> Result<Self> {
        SignalParams::new(p, support.len().min(p), amplitude)?;
        support.sort_unstable();
        support.dedup();
        if support.last().is_some_and(|&i| i >= p) {
            return Err(Error::param("support index out of range"));
        }
        let mut values = vec![0.0; p];
        for &i in &support {
            values[i] = amplitude;
        }
        Ok(SparseSignal { values, support, amplitude })
    }

    /// The all-zero signal of length `p`.
    pub fn null(p: usize) -> Self {
        SparseSignal { values: vec![0.0; p], support: Vec::new(), amplitude: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// Reorders coordinates so that new index `perm[i]` holds old index `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let support: Vec<usize> = self.support.iter().map(|&i| perm[i]).collect();
        SparseSignal::from_support(self.len(), support, self.amplitude)
            .expect("permutation preserves validity")
    }
}

/// Support size `round(p^(1-beta))`, never below one.
pub fn sparsity_from_beta(p: usize, beta: f64) -> Result<usize> {
    if p < 2 {
        return Err(Error::param(format!("p must be at least 2, got {p}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta must lie in (0, 1), got {beta}")));
    }
    let s = (p as f64).powf(1.0 - beta).round() as usize;
    Ok(s.clamp(1, p))
}

/// Amplitude `sqrt(2 r ln p)`.
pub fn amplitude_from_r(p: f64, r: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::param(format!("p must be at least 2, got {p}")));
    }
    if !(r > 0.0) {
        return Err(Error::param(format!("r must be positive, got {r}")));
    }
    Ok((2.0 * r * p.ln()).sqrt())
}

/// Inverse of [`amplitude_from_r`]: the exponent `r = mu^2 / (2 ln p)`.
pub fn r_from_amplitude(p: usize, amplitude: f64) -> f64 {
    amplitude * amplitude / (2.0 * (p as f64).ln())
}

/// Draws a signal whose support is a uniformly random `num_nonzero`-subset.
pub fn generate_sparse_signal<R: Rng + ?Sized>(params: &SignalParams, rng: &mut R) -> Result<SparseSignal> {
    params.validate()?;
    let support = index::sample(rng, params.p, params.num_nonzero).into_vec();
    SparseSignal::from_support(params.p, support, params.amplitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_from_beta(1 << 14, 0.5).unwrap(), 128);
        assert_eq!(sparsity_from_beta(2, 0.999).unwrap(), 1);
        assert_eq!(sparsity_from_beta(1 << 20, 0.5).unwrap(), 1024);
        assert_eq!(sparsity_from_beta(1 << 17, 0.5).unwrap(), 362);
    }

    #[test]
    fn sparsity_rejects_bad_input() {
        assert!(sparsity_from_beta(1, 0.5).is_err());
        assert!(sparsity_from_beta(100, 0.0).is_err());
        assert!(sparsity_from_beta(100, 1.0).is_err());
    }

    #[test]
    fn amplitude_examples() {
        let p = (1u64 << 14) as f64;
        assert_abs_diff_eq!(amplitude_from_r(p, 1.0).unwrap(), 4.405_464_908, epsilon = 1e-8);
        assert_abs_diff_eq!(amplitude_from_r(std::f64::consts::E, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        // 2 ln p is about 19.41 at p = 2^14, so SNR 20 corresponds to r just above one.
        let r = r_from_amplitude(1 << 14, 20f64.sqrt());
        assert_abs_diff_eq!(2.0 * p.ln(), 19.408, epsilon = 1e-3);
        assert_abs_diff_eq!(r, 1.0304, epsilon = 1e-3);
        assert!(amplitude_from_r(p, 0.0).is_err());
    }

    #[test]
    fn degenerate_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = generate_sparse_signal(&SignalParams::new(4, 0, 1.0).unwrap(), &mut rng).unwrap();
        assert!(empty.support().is_empty());
        assert_eq!(empty.values(), &[0.0; 4]);
        let full = generate_sparse_signal(&SignalParams::new(4, 4, 2.0).unwrap(), &mut rng).unwrap();
        assert_eq!(full.values(), &[2.0; 4]);
        assert_eq!(full.support(), &[0, 1, 2, 3]);
    }

    #[test]
    fn params_invariants() {
        assert!(SignalParams::new(4, 5, 1.0).is_err());
        assert!(SignalParams::new(4, 2, -1.0).is_err());
        assert!(SignalParams::new(0, 0, 1.0).is_err());
    }

    #[test]
    fn same_seed_same_signal() {
        let params = SignalParams::new(1000, 30, 1.5).unwrap();
        let a = generate_sparse_signal(&params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_sparse_signal(&params, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values().iter().filter(|&&v| v != 0.0).count(), 30);
    }

    #[test]
    fn inclusion_frequencies_are_uniform() {
        // p = 10^4, s = 100, 10^4 redraws: each index appears with frequency
        // 0.01; a binomial 3-sigma band is sqrt(0.01 * 0.99 / 1e4) * 3.
        let (p, s, draws) = (10_000, 100, 10_000);
        let params = SignalParams::new(p, s, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u32; p];
        for _ in 0..draws {
            let sig = generate_sparse_signal(&params, &mut rng).unwrap();
            assert_eq!(sig.support().len(), s);
            for &i in sig.support() {
                counts[i] += 1;
            }
        }
        let expected = s as f64 / p as f64;
        let band = 3.0 * (expected * (1.0 - expected) / draws as f64).sqrt();
        let outside = counts
            .iter()
            .filter(|&&c| ((c as f64 / draws as f64) - expected).abs() > band)
            .count();
        // About 0.27% of indices fall outside a 3-sigma band by chance.
        assert!(outside < p / 100, "{outside} indices outside the band");

        // Chi-square goodness of fit against s/p at level 0.01.
        let e = expected * draws as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        // Draws within one signal are without replacement, so the statistic is
        // scaled by (1 - s/p) relative to the independent-cells case.
        let scaled = chi2 / (1.0 - expected);
        let crit = ChiSquared::new((p - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(scaled < crit, "chi2 {scaled} >= {crit}");
    }
}
