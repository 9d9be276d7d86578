//! Seed-derived random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `stream`-th independent substream of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(mix(seed) ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    rng_from(derive_seed(seed, stream))
}

// Named streams so pipeline stages never share randomness.
pub const STREAM_GENERATE: u64 = 1;
pub const STREAM_SPLIT: u64 = 2;
pub const STREAM_CV_FOLDS: u64 = 3;
pub const STREAM_JAB: u64 = 4;
pub const STREAM_BOOTSTRAP: u64 = 5;
