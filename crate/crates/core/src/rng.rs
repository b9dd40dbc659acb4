//! Per-task random streams derived from one user seed.
//!
//! Task `(tag, index)` gets a ChaCha8 stream seeded by a splitmix64 chain
//! over `(seed, tag, index)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stable 64-bit id of a task tag.
pub fn tag_id(tag: &str) -> u64 {
    // FNV-1a
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn task_seed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ tag_id(tag)) ^ index)
}

pub fn task_rng(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(task_seed(seed, tag, index))
}
