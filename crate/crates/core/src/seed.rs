//! Keyed seed derivation.
//!
//! Every random stream in the crate (trial data, background indices, voters,
//! observation noise) is keyed off a master seed through [`derive_seed`], so
//! results are reproducible and independent of execution order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Derive a child seed from `(key, stream, index)` using ChaCha8 as a PRF.
pub fn derive_seed(key: u64, stream: u64, index: u64) -> u64 {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&key.to_le_bytes());
    bytes[8..16].copy_from_slice(&stream.to_le_bytes());
    bytes[16..24].copy_from_slice(&index.to_le_bytes());
    bytes[24..32].copy_from_slice(b"tnperm\x00\x01");
    ChaCha8Rng::from_seed(bytes).next_u64()
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags so that sibling derivations never share a key.
pub(crate) mod stream {
    pub const ORDER_CALL: u64 = 1;
    pub const VOTER: u64 = 2;
    pub const TRIAL: u64 = 3;
    pub const TRIAL_PERM: u64 = 4;
    pub const TRIAL_CORES: u64 = 5;
    pub const TRIAL_NOISE: u64 = 6;
    pub const TRIAL_RECOVERY: u64 = 7;
}
