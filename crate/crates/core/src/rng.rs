//! Deterministic per-replication random streams.
//!
//! Replication `i` of a campaign seeded with `master` draws from
//! `ChaCha8Rng::seed_from_u64(stream_seed(master, i))`. The mixing function is
//! two rounds of the SplitMix64 finalizer applied to
//! `master + (i + 1) * 0x9E3779B97F4A7C15` (wrapping). Streams depend only on
//! `(master, i)`, never on which thread runs the replication.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The rng type handed to every simulation routine.
pub type StreamRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, index: u64) -> u64 {
    let z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    splitmix64(splitmix64(z))
}

pub fn stream(master: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, index))
}
