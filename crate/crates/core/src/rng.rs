//! Seeded random streams.
//!
//! One root seed per run; every instance draws from its own ChaCha8 stream
//! keyed by the root seed and a label, so instances can be produced in any
//! order (or in parallel) with identical bytes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

/// Independent stream for `(seed, key parts)`.
pub fn substream(seed: u64, parts: &[&str]) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

pub fn seeded(seed: u64) -> Stream {
    substream(seed, &[])
}
