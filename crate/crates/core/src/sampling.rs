//! Seeded sample points, uniform in a ball.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::exprlang::Domain;
use crate::jets::NVARS;

pub const DEFAULT_SEED: u64 = 0xB0C4;

/// `n` points uniform in the ball `domain` shrunk by `margin` (a fraction
/// of the radius), from a ChaCha8 stream seeded with `seed`.
pub fn ball_points(domain: &Domain, n: usize, seed: u64, margin: f64) -> Vec<[f64; NVARS]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = domain.radius * (1.0 - margin);
    (0..n)
        .map(|_| {
            let dir: [f64; NVARS] = std::array::from_fn(|_| rng.sample(StandardNormal));
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let r = radius * rng.gen::<f64>().powf(1.0 / NVARS as f64);
            std::array::from_fn(|i| domain.center[i] + r * dir[i] / norm)
        })
        .collect()
}
