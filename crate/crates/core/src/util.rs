//! Small shared helpers.

use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Deterministic RNG used throughout the crate for reproducible tests and
/// data generation.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard-normal vector of length `n`.
pub fn randn(rng: &mut impl Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| StandardNormal.sample(rng)))
}

/// Uniform vector on `[lo, hi)`.
pub fn rand_uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.random_range(lo..hi)))
}

/// Euclidean inner product.
pub fn dot(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.dot(b)
}

/// Euclidean norm.
pub fn norm(a: &Array1<f64>) -> f64 {
    a.dot(a).sqrt()
}
