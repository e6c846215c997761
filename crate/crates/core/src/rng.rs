//! Keyed random streams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is built from
//! `(seed, replication, population, purpose)`. Streams never overlap and do
//! not depend on the order in which tasks run.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Covariates = 1,
    Errors = 2,
    Contamination = 3,
    NullDraws = 4,
    PowerDraws = 5,
}

/// Stream keyed by `(seed, replication, population, purpose)`.
pub fn stream(seed: u64, replication: u64, population: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(&population.to_le_bytes());
    key[24..].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Child seed for task `index`, via the SplitMix64 finalizer.
pub fn derive(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
