//! Seedable random streams, one per (class, purpose).
//!
//! Every stream is a ChaCha8 generator keyed by the run seed and placed on its
//! own stream number, so changing how one class draws never shifts another
//! class's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in run metadata so traces can be attributed to a generator.
pub const RNG_ALGORITHM: &str = "chacha8-stream(seed,class*4+purpose)/rand_chacha-0.9";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    SessionArrivals = 0,
    JobInterarrivals = 1,
    ServiceTimes = 2,
}

pub fn stream(seed: u64, class: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class as u64 * 4 + purpose as u64);
    rng
}

/// SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `run` derived from the master seed.
pub fn replication_seed(master: u64, run: u64) -> u64 {
    splitmix64(master.wrapping_add(run))
}
