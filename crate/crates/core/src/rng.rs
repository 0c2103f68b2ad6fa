//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed and derives sub-stream seeds
//! with [`derive_seed`], so results depend only on `(seed, index)` and never
//! on scheduling or batch partitioning.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rand_chacha::ChaCha8Rng as Rng;

/// Default seed for Monte Carlo routines when none is supplied.
pub const DEFAULT_SEED: u64 = 0x5EED_C0DE_2024;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` under `seed`: `mix64(seed ^ mix64(index))`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_at(seed: u64, index: u64) -> ChaCha8Rng {
    stream(derive_seed(seed, index))
}

#[inline]
pub fn std_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
