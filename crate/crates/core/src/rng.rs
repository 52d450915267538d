//! Seeded randomness. Every stochastic component draws from a `ChaCha8Rng`
//! whose seed is derived from a master seed and a component name.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-seed for `component`: the first eight bytes of
/// `SHA-256(master_seed as little-endian u64 || component)`.
///
/// Stable across platforms and releases; changing it changes every output.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(component.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn derived_rng(master: u64, component: &str) -> SimRng {
    seeded_rng(derive_seed(master, component))
}
