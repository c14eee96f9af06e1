//! Fixtures shared by the benchmarks.

use logenergy::Configuration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Uniform random configuration with a fixed seed.
pub fn random_config(n: usize, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Configuration::random(n, &mut rng).expect("random points are distinct")
}
