//! Seeded random streams.
//!
//! A run uses one seed. Each consumer draws from its own ChaCha stream of that
//! seed so that, for example, changing the obstacle map leaves spawn positions
//! untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;

pub const MAP_STREAM: u64 = 1;
pub const SPAWN_STREAM: u64 = 2;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw in `[lo, hi)`; returns `lo` for an empty interval.
pub fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}
