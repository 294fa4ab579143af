//! Seed derivation.
//!
//! Every path owns its own generator so that ensembles are independent of
//! scheduling. The scheme is:
//!
//! * path `i` of an ensemble with root seed `r` uses seed
//!   `splitmix64(r + (i + 1) * 0x9E3779B97F4A7C15)`;
//! * within a path, jump epochs are drawn from ChaCha8 stream
//!   [`JUMP_STREAM`] and Brownian increments from [`BROWNIAN_STREAM`], both
//!   keyed by the path seed. Jump epochs therefore do not change when only the
//!   step count changes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const JUMP_STREAM: u64 = 0;
pub const BROWNIAN_STREAM: u64 = 1;
pub const SAMPLING_STREAM: u64 = 2;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index` in an ensemble rooted at `root`.
pub fn path_seed(root: u64, index: u64) -> u64 {
    splitmix64(root.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// ChaCha8 generator for one named stream of a seed.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
