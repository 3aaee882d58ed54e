//! Deterministic derivation of per-consumer RNG streams from one run seed.
//!
//! Every randomized component (weight init, data synthesis, augmentation,
//! probe selection) takes its own labeled sub-seed. The split is
//! `first 8 bytes of SHA-256(seed as u64 LE ‖ label), read LE`, so adding a
//! new consumer never perturbs the streams of existing ones, and the same
//! `(seed, label)` pair is reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derives the sub-seed for `label` from the run seed.
pub fn split(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// A ChaCha12 stream seeded with `split(seed, label)`.
pub fn rng(seed: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(split(seed, label))
}
