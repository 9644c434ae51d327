//! Seed derivation.
//!
//! Every random stream is keyed by a master seed plus a path of integers
//! (cell index, repetition, stream tag, ...). Derivation is a SplitMix64
//! chain, so child seeds do not depend on the order in which jobs run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator used throughout the crate.
pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `base` and a path of integers.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags, so that seeds for different purposes never collide.
pub mod stream {
    pub const POINTS: u64 = 1;
    pub const FALLBACK: u64 = 2;
    pub const DATA: u64 = 3;
    pub const MINIBATCH: u64 = 4;
    pub const DIRECTIONS: u64 = 5;
    pub const PRIOR: u64 = 6;
    pub const POPULATION: u64 = 7;
    pub const MUTATION: u64 = 8;
    pub const REFERENCE: u64 = 9;
    pub const SECOND_SIDE: u64 = 10;
}
