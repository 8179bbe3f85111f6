//! Seeded generators.
//!
//! Every random draw in the crate goes through ChaCha8 so that streams are
//! stable across platforms and crate versions of `rand`. Dropout masks use a
//! counter-style construction: the 256-bit ChaCha key is the tuple
//! `(seed, epoch, batch, slot, head)`, so a mask depends only on where it sits
//! in the training schedule and never on how many draws happened before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Position of one participant inside the training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropoutKey {
    pub seed: u64,
    pub epoch: u32,
    pub batch: u32,
    /// Index of the participant within its batch.
    pub slot: u32,
}

impl DropoutKey {
    pub fn new(seed: u64, epoch: u32, batch: u32, slot: u32) -> Self {
        Self {
            seed,
            epoch,
            batch,
            slot,
        }
    }

    pub fn with_slot(self, slot: u32) -> Self {
        Self { slot, ..self }
    }

    /// Generator for the dropout mask of regression head `head`.
    pub fn head_rng(&self, head: u32) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..12].copy_from_slice(&self.epoch.to_le_bytes());
        key[12..16].copy_from_slice(&self.batch.to_le_bytes());
        key[16..20].copy_from_slice(&self.slot.to_le_bytes());
        key[20..24].copy_from_slice(&head.to_le_bytes());
        // domain tag so these streams never coincide with `stream_rng`
        key[24..32].copy_from_slice(b"dropout\0");
        ChaCha8Rng::from_seed(key)
    }
}

/// Named generator for non-dropout randomness (init, shuffling, synthesis).
pub fn stream_rng(seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    for (dst, src) in key[16..32].iter_mut().zip(purpose.bytes()) {
        *dst = src;
    }
    ChaCha8Rng::from_seed(key)
}
