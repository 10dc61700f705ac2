//! Portable seed derivation.
//!
//! Every stochastic component draws from a ChaCha8 generator whose seed is derived from a root
//! seed and a list of labels, so independent substreams never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hashes `root` together with `labels` into a 64-bit seed.
pub fn derive_seed(root: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    for label in labels {
        // length prefix keeps ["ab", "c"] and ["a", "bc"] apart
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of the stream generator for one experiment cell. Shared by every mode.
pub fn generator_seed(root: u64, scenario: &str) -> u64 {
    derive_seed(root, &["gen", scenario])
}

/// Seed of the network initialisation for one experiment cell.
pub fn model_seed(root: u64, mode: &str) -> u64 {
    derive_seed(root, &["model", mode])
}
