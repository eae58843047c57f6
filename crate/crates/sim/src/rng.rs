//! Keyed random streams. Every random decision in a run draws from a stream
//! derived from `(seed, purpose, a, b)`, so results never depend on the
//! order in which clients or threads happen to execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Dataset = 1,
    Split = 2,
    Partition = 3,
    Init = 4,
    Batch = 5,
    Attack = 6,
    Validation = 7,
}

pub fn stream(seed: u64, purpose: Stream, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
