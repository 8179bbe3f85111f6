use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of PHQ-8 items.
pub const NUM_SYMPTOMS: usize = 8;

/// Largest score of a single PHQ-8 item.
pub const MAX_ITEM_SCORE: f64 = 3.0;

/// PHQ-8 items in questionnaire order.
pub const SYMPTOM_NAMES: [&str; NUM_SYMPTOMS] = [
    "no_interest",
    "depressed",
    "sleep",
    "tired",
    "appetite",
    "failure",
    "concentration",
    "psychomotor",
];

/// How the attention temperature is parameterised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    /// Fixed `τ = 1`, no parameter.
    None,
    /// One shared `τ = exp(ρ)`.
    Global,
    /// One `τ_s = exp(ρ_s)` per symptom.
    PerSymptom,
}

impl TauMode {
    pub const ALL: [TauMode; 3] = [TauMode::None, TauMode::Global, TauMode::PerSymptom];

    /// Length of the `rho` parameter vector.
    pub fn param_count(self) -> usize {
        match self {
            TauMode::None => 0,
            TauMode::Global => 1,
            TauMode::PerSymptom => NUM_SYMPTOMS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TauMode::None => "none",
            TauMode::Global => "global",
            TauMode::PerSymptom => "per_symptom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TauMode::None),
            "global" => Ok(TauMode::Global),
            "per_symptom" => Ok(TauMode::PerSymptom),
            other => Err(Error::Validation(format!(
                "unknown tau mode {other:?} (expected none, global or per_symptom)"
            ))),
        }
    }
}

/// Maps a head's raw output onto the item range `[0, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputBounding {
    /// `3 · sigmoid(o)`.
    Sigmoid3,
    /// `clamp(o, 0, 3)`; gradient is zero outside the range.
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub num_symptoms: usize,
    pub head_hidden: usize,
    pub dropout_p: f64,
    pub tau_mode: TauMode,
    pub output_bounding: OutputBounding,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 1024,
            num_symptoms: NUM_SYMPTOMS,
            head_hidden: 128,
            dropout_p: 0.1,
            tau_mode: TauMode::PerSymptom,
            output_bounding: OutputBounding::Sigmoid3,
        }
    }
}

impl ModelConfig {
    pub fn with_embed_dim(mut self, embed_dim: usize) -> Self {
        self.embed_dim = embed_dim;
        self
    }

    pub fn with_tau_mode(mut self, tau_mode: TauMode) -> Self {
        self.tau_mode = tau_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 {
            return Err(Error::Validation("embed_dim must be at least 1".into()));
        }
        if self.head_hidden == 0 {
            return Err(Error::Validation("head_hidden must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Validation(format!(
                "dropout_p must lie in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if self.num_symptoms != NUM_SYMPTOMS {
            return Err(Error::Validation(format!(
                "num_symptoms is fixed at {NUM_SYMPTOMS}, got {}",
                self.num_symptoms
            )));
        }
        Ok(())
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let d = self.embed_dim;
        let h = self.head_hidden;
        let queries = NUM_SYMPTOMS * d;
        let norms = 3 * 2 * d;
        let heads = NUM_SYMPTOMS * (h * d + h + h + 1);
        queries + norms + self.tau_mode.param_count() + heads
    }
}
