//! Deterministic desk-scale simulator for multi-robot exploration of
//! subterranean environments: tri-state voxel mapping, a sampling-based
//! local/global exploration planner for ground and aerial robots, and a
//! centralized coordination layer that merges submaps, extracts global
//! frontiers and re-positions robots under intermittent communication.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod cohort;
pub mod config;
pub mod global;
pub mod math;
pub mod oracles;
pub mod planner;
pub mod robot;
pub mod sim;
pub mod sensor;
pub mod voxel;
pub mod world;

/// Named sub-stream identifiers so every randomness consumer draws from its
/// own reproducible stream of the single episode seed.
pub mod stream {
    pub const WORLD: u64 = 1;
    pub const PLANNER: u64 = 2;
    pub const COHORT: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const TEST: u64 = 9;
}

/// Derive a deterministic RNG from `(seed, purpose, salt)`.
///
/// `purpose` is one of [`stream`]; `salt` distinguishes repeated uses (robot
/// id, plan counter, submap sequence, ...). Mixing is splitmix64 so nearby
/// keys give unrelated streams.
pub fn seeded_rng(seed: u64, purpose: u64, salt: u64) -> ChaCha8Rng {
    let mut x = seed ^ purpose.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    let mut out = [0u8; 32];
    for chunk in out.chunks_mut(8) {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(out)
}
