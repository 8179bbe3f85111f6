//! Checkpoint files.
//!
//! A single line of JSON (the header, terminated by `\n`) followed by the
//! parameters as little-endian `f64` in manifest order. `byte_offset` counts
//! from the first byte after the newline.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::model::{Model, ModelConfig, ModelParams};

use super::train::TrainConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointConfig {
    pub model: ModelConfig,
    pub optimizer: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub byte_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: CheckpointConfig,
    seed: u64,
    epoch: usize,
    dev_rmse: f64,
    param_manifest: Vec<ManifestItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: CheckpointConfig,
    pub seed: u64,
    /// 1-based epoch the parameters come from.
    pub epoch: usize,
    pub dev_rmse: f64,
    pub params: ModelParams,
}

fn manifest(params: &ModelParams) -> Vec<ManifestItem> {
    let mut offset = 0;
    params
        .specs()
        .into_iter()
        .map(|s| {
            let item = ManifestItem {
                name: s.name,
                rows: s.rows,
                cols: s.cols,
                byte_offset: offset,
            };
            offset += 8 * s.rows * s.cols;
            item
        })
        .collect()
}

impl Checkpoint {
    pub fn model(&self) -> Result<Model> {
        Model::new(self.config.model.clone(), self.params.clone())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            seed: self.seed,
            epoch: self.epoch,
            dev_rmse: self.dev_rmse,
            param_manifest: manifest(&self.params),
        };
        let mut out = json::to_vec(&header)?;
        out.push(b'\n');
        for s in self.params.slices() {
            for v in s {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format(format!("{origin}: no checkpoint header line")))?;
        let header: Header = serde_json::from_slice(&bytes[..nl])
            .map_err(|e| Error::Format(format!("{origin}: bad checkpoint header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{origin}: checkpoint format {} unsupported (expected {FORMAT_VERSION})",
                header.format_version
            )));
        }
        header.config.model.validate()?;
        let mut params = ModelParams::zeros(&header.config.model);
        let expected = manifest(&params);
        if header.param_manifest != expected {
            return Err(Error::Validation(format!(
                "{origin}: parameter manifest does not match the stored model config"
            )));
        }
        let body = &bytes[nl + 1..];
        let need = 8 * params.param_count();
        if body.len() != need {
            return Err(Error::Length {
                path: origin.to_string(),
                expected: nl + 1 + need,
                actual: bytes.len(),
            });
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        for s in params.slices_mut() {
            for v in s.iter_mut() {
                *v = values.next().expect("length checked");
            }
        }
        Ok(Self {
            config: header.config,
            seed: header.seed,
            epoch: header.epoch,
            dev_rmse: header.dev_rmse,
            params,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}
