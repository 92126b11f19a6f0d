//! Seeded random streams.
//!
//! Every episode gets its own ChaCha stream keyed by `seed ^ mix(index)`, so
//! the order in which episodes are sampled never changes their content.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SneRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn master_rng(seed: u64) -> SneRng {
    SneRng::seed_from_u64(seed)
}

/// Independent substream for episode `index` under master `seed`.
pub fn episode_rng(seed: u64, index: u64) -> SneRng {
    SneRng::seed_from_u64(seed ^ mix64(index))
}

/// Substream for a named phase of a run (e.g. exploration batch `index`).
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> SneRng {
    SneRng::seed_from_u64(seed ^ mix64(mix64(stream) ^ index))
}

/// Draws an index from a probability vector. Mass lost to rounding goes to
/// the last index with positive probability.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
