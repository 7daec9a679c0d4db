//! Seed derivation and stream-split random generators.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a 64-bit
//! seed and addressed by a 64-bit stream id, so independent pieces of one
//! replication (covariates, noise, corruption) never share a stream and can
//! be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const STREAM_TRUTH: u64 = 1;
pub const STREAM_COVARIATES: u64 = 2;
pub const STREAM_NOISE: u64 = 3;
pub const STREAM_CORRUPTION: u64 = 4;
pub const STREAM_PROBE: u64 = 5;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for replication `index` of a run keyed by `base` and `tag`.
///
/// For fixed `base` and `tag` the map `index -> seed` is a composition of
/// bijections, so distinct indices never collide.
pub fn mix64(base: u64, index: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ index) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
