//! The symptom-guided cross-attention regressor.

mod batch;
mod config;
mod export;
mod gradcheck;
mod network;
mod params;

pub use batch::{batch_forward_backward, pad_to, BatchItem, BatchResult};
pub use config::{
    ModelConfig, OutputBounding, TauMode, MAX_ITEM_SCORE, NUM_SYMPTOMS, SYMPTOM_NAMES,
};
pub use gradcheck::{check_model_gradients, random_problem, ModelGradCheck};
pub use export::{entropy, export_attention, top_k, AttentionRecord, TOP_K};
pub use network::{check_labels, AttentionMap, BackwardOutput, ForwardOutput, Model, Pass};
pub use params::{Gradients, HeadParams, LayerNormParams, ModelParams, ParamKind, ParamSpec};
