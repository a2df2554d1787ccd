//! Inputs shared by the benchmarks in `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refract_core::oracle::generate::{generate, GenConfig, Generated};

/// `n` programs drawn with `cfg`, program `i` from seed `i`.
pub fn corpus(cfg: &GenConfig, n: u64) -> Vec<Generated> {
    (0..n).map(|seed| generate(&mut ChaCha8Rng::seed_from_u64(seed), cfg)).collect()
}
