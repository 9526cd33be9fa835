//! Random streams.
//!
//! Every trial owns an independent ChaCha stream whose seed is a pure
//! function of `(master_seed, trial_index, stream tag)`, so results do not
//! depend on how trials are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Source of standard Gaussian noise samples `w ~ N(0, 1)`.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

impl<R: Rng + ?Sized> NoiseSource for R {
    fn standard_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

/// Degenerate noise source that always returns zero. Useful for noiseless
/// checks of the sampling loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// Which part of a trial a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Signal,
    DistilledNoise,
    NonAdaptiveNoise,
    /// Independent auxiliary streams, e.g. one per validation check.
    Auxiliary(u32),
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Signal => 0x5349_474e,
            StreamTag::DistilledNoise => 0x4453_4e5a,
            StreamTag::NonAdaptiveNoise => 0x4e41_4e5a,
            StreamTag::Auxiliary(n) => 0x4155_5800_0000_0000 ^ u64::from(n),
        }
    }
}

/// Experiment phase. Calibration (pilot) trials and evaluation trials never
/// share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Evaluation,
    Pilot,
}

impl Phase {
    fn code(self) -> u64 {
        match self {
            Phase::Evaluation => 0,
            Phase::Pilot => 0x5049_4c4f_5400_0000,
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the 64-bit seed of one stream:
/// `mix(mix(mix(master ^ phase) ^ trial) ^ tag)`.
pub fn derive_seed(master_seed: u64, phase: Phase, trial_index: u64, tag: StreamTag) -> u64 {
    let a = mix64(master_seed ^ phase.code());
    let b = mix64(a ^ trial_index);
    mix64(b ^ tag.code())
}

/// Opens the stream for `(master_seed, phase, trial_index, tag)`.
pub fn trial_rng(master_seed: u64, phase: Phase, trial_index: u64, tag: StreamTag) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, phase, trial_index, tag))
}
