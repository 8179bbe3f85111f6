//! AdamW, gradient clipping, the training loop and checkpoints.

mod adamw;
mod checkpoint;
mod train;

pub use adamw::{adamw_step, clip_global_norm, AdamWConfig, OptimState};
pub use checkpoint::{Checkpoint, CheckpointConfig, ManifestItem, FORMAT_VERSION};
pub use train::{best_epoch, improves, train, EpochLog, TrainConfig, TrainOutcome};
