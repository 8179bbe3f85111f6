use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, ParticipantRecord, Split};
use crate::error::{Error, Result};
use crate::metrics::evaluate;
use crate::model::{batch_forward_backward, BatchItem, Model, ModelConfig, Pass, NUM_SYMPTOMS};
use crate::numkern::rng::{stream_rng, DropoutKey};
use crate::numkern::Matrix;

use super::adamw::{adamw_step, clip_global_norm, AdamWConfig, OptimState};
use super::checkpoint::{Checkpoint, CheckpointConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Zero the temperature gradients before clipping, keeping `τ` at its
    /// initial value.
    pub freeze_tau: bool,
    pub adamw: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 8,
            freeze_tau: false,
            adamw: AdamWConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Validation(format!(
                "epochs and batch_size must be positive, got {} and {}",
                self.epochs, self.batch_size
            )));
        }
        self.adamw.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_rmse: f64,
    pub dev_mae: f64,
    pub dev_ccc: f64,
    pub tau: [f64; NUM_SYMPTOMS],
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Whether `candidate` replaces the current best; ties keep the earlier one.
pub fn improves(candidate: f64, best: Option<f64>) -> bool {
    best.is_none_or(|b| candidate < b)
}

/// 1-based epoch selected from a dev RMSE sequence.
pub fn best_epoch(dev_rmse: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in dev_rmse.iter().enumerate() {
        if improves(r, best.map(|b| b.1)) {
            best = Some((i + 1, r));
        }
    }
    best.map(|b| b.0)
}

fn with_context(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("epoch {epoch}, batch {batch}: {msg}")),
        other => other,
    }
}

/// Trains from a fresh initialisation and returns the checkpoint with the
/// lowest dev total-score RMSE.
pub fn train(
    corpus: &Corpus,
    model_config: &ModelConfig,
    queries: &Matrix,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let train_set = corpus.split(Split::Train);
    let dev_set = corpus.split(Split::Dev);
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::InvalidInput(format!(
            "training needs non-empty train and dev splits, got {} and {}",
            train_set.len(),
            dev_set.len()
        )));
    }
    if corpus.d_k != model_config.embed_dim {
        return Err(Error::Dimension(format!(
            "corpus embeddings are {}-dimensional, model expects {}",
            corpus.d_k, model_config.embed_dim
        )));
    }
    let mut model = Model::init(model_config.clone(), queries, seed)?;
    let mut state = OptimState::new(&model.params, cfg.adamw);
    let masks: Vec<Vec<bool>> = train_set.iter().map(|r| r.mask()).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<Checkpoint> = None;
    for epoch in 1..=cfg.epochs {
        let mut rng = stream_rng(seed, "shuffle", epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let items: Vec<BatchItem<'_>> = chunk
                .iter()
                .map(|&i| {
                    let r: &ParticipantRecord = train_set[i];
                    BatchItem {
                        segments: &r.segments,
                        mask: &masks[i],
                        labels: &r.labels,
                    }
                })
                .collect();
            let key = DropoutKey::new(seed, epoch as u32, b as u32, 0);
            let mut res = batch_forward_backward(&model, &items, Pass::Train(key))
                .map_err(|e| with_context(e, epoch, b))?;
            if !res.loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "epoch {epoch}, batch {b}: loss is {}",
                    res.loss
                )));
            }
            loss_sum += res.loss * chunk.len() as f64;
            if cfg.freeze_tau {
                res.grads.rho.fill(0.0);
            }
            clip_global_norm(&mut res.grads, cfg.adamw.clip_norm)
                .map_err(|e| with_context(e, epoch, b))?;
            adamw_step(&mut model.params, &res.grads, &mut state)?;
        }
        let dev = evaluate(&model, &dev_set).map_err(|e| with_context(e, epoch, 0))?;
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            dev_rmse: dev.total.rmse,
            dev_mae: dev.total.mae,
            dev_ccc: dev.total.ccc,
            tau: model.params.taus(),
        });
        if !dev.total.rmse.is_finite() {
            return Err(Error::Numerical(format!("epoch {epoch}: dev RMSE is {}", dev.total.rmse)));
        }
        if improves(dev.total.rmse, best.as_ref().map(|c| c.dev_rmse)) {
            best = Some(Checkpoint {
                config: CheckpointConfig {
                    model: model_config.clone(),
                    optimizer: *cfg,
                },
                seed,
                epoch,
                dev_rmse: dev.total.rmse,
                params: model.params.clone(),
            });
        }
    }
    Ok(TrainOutcome {
        best: best.expect("at least one epoch"),
        log,
    })
}
