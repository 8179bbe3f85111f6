//! Symptom-query cross-attention for PHQ-8 regression over precomputed
//! speech-segment embeddings.

pub mod cli;
pub mod data;
pub mod error;
pub mod harness;
pub mod json;
pub mod metrics;
pub mod model;
pub mod numkern;
pub mod optim;

pub use error::{Error, Result};
