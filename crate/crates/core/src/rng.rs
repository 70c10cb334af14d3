//! Seed derivation.
//!
//! Every random stream in the crate is keyed by a root seed plus a path of
//! counters (fold index, tree index, grid cell, ...). Streams never share
//! state, so work scheduled in parallel draws exactly the numbers a serial
//! run would.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used as the first path component.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const OUTER_FOLDS: u64 = 2;
    pub const INNER_FOLDS: u64 = 3;
    pub const FIT: u64 = 4;
    pub const BACKGROUND: u64 = 5;
    pub const KERNEL: u64 = 6;
    pub const SYNTH: u64 = 7;
    pub const JITTER: u64 = 8;
    pub const TREE: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `root` and a counter path.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A ChaCha8 generator for the stream at `path` under `root`.
pub fn rng_for(root: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}
