//! Counter-based seeding and complex Gaussian sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, CMat};

/// Stream tags keep the random draws of different quantities independent
/// even when they share a trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Mode = 1,
    Channel = 2,
    Noise = 3,
    Waveform = 4,
    Phase = 5,
    Misc = 6,
}

/// SplitMix64 finaliser.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a trial seed from (base seed, trial index, stream).
pub fn mix(base_seed: u64, trial_index: u64, stream: Stream) -> u64 {
    splitmix(splitmix(splitmix(base_seed) ^ trial_index) ^ (stream as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub type TrialRng = ChaCha8Rng;

pub fn rng_for(base_seed: u64, trial_index: u64, stream: Stream) -> TrialRng {
    ChaCha8Rng::seed_from_u64(mix(base_seed, trial_index, stream))
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. CN(0, variance) entries: real and imaginary parts
/// each N(0, variance / 2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMat {
    let sd = (variance / 2.0).sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(sd * re, sd * im)
    })
}
