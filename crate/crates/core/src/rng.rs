//! Seeding scheme for reproducible, parallelism-invariant runs.
//!
//! A run's 64-bit seed is `splitmix64(base_seed ⊕ splitmix64(run_index))`.
//! From that seed each consumer draws from its own ChaCha8 stream, so the
//! environment, the weight sampler and the agent never share a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids within one run.
pub mod streams {
    pub const ENVIRONMENT: u64 = 0;
    pub const WEIGHTS: u64 = 1;
    pub const AGENT: u64 = 2;
    pub const ORACLE: u64 = 3;
}

/// One step of the SplitMix64 generator, used as a 64-bit mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(run_index))
}

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
