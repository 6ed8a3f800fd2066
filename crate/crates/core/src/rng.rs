//! Seed streams for reproducible replicate-parallel experiments.
//!
//! Every replicate gets its own ChaCha stream keyed by the experiment seed and
//! the replicate index, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeedStream = ChaCha8Rng;

/// Stream for replicate `index` of the experiment seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> SeedStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, used when one experiment spawns independent sub-experiments.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
