//! Seed handling shared by every stochastic routine.
//!
//! All randomness flows through [`Rng`], a ChaCha8 stream generator keyed by a
//! 64-bit seed. ChaCha8 is counter based, so a stream is fully determined by
//! the seed and the number of words drawn. Per-trial and per-block seeds are
//! derived with [`derive_seed`]:
//!
//! ```text
//! seed_t = mix64(base ^ (t * 0x9E3779B97F4A7C15))      (wrapping multiply)
//! mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            z ^ (z >> 31)
//! ```
//!
//! `mix64` is the SplitMix64 finalizer.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the open interval (0, 1).
pub fn open01(rng: &mut Rng) -> f64 {
    let bits = rng.gen::<u64>() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..len`.
pub fn index(rng: &mut Rng, len: usize) -> usize {
    rng.gen_range(0..len)
}

/// Fisher-Yates shuffle driven by `rng`.
pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}
