//! Named random streams derived from one root seed.
//!
//! Every consumer of randomness asks for `(root, name, index)`, so adding a
//! stream or reordering work never perturbs another stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn stream(root: u64, name: &str, index: u64) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}

/// A child seed, for APIs that take a plain `u64`.
pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(root, name, index).next_u64()
}
