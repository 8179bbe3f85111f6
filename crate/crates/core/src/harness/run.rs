use std::fs;
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::data::Split;
use crate::error::{Error, Result};
use crate::json;
use crate::metrics::{evaluate, MetricsReport};
use crate::model::TauMode;
use crate::optim::{train, Checkpoint, EpochLog};

use super::spec::{load_source, ExperimentSpec, LoadedCorpus};

pub const RUN_FILE: &str = "run.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOG_FILE: &str = "log.jsonl";
pub const METRICS_FILE: &str = "metrics.json";
pub const ABLATION_FILE: &str = "ablation.json";
pub const ABLATION_TABLE_FILE: &str = "ablation.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub best_epoch: usize,
    pub dev: MetricsReport,
    pub test: Option<MetricsReport>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    pub metrics: RunMetrics,
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Trains on an already loaded corpus and writes `run.json`,
/// `checkpoint.bin`, `log.jsonl` and `metrics.json` into `out`.
pub fn run_training(spec: &ExperimentSpec, loaded: &LoadedCorpus, out: &Path) -> Result<RunResult> {
    spec.validate()?;
    let model_cfg = spec.model.resolve(loaded.corpus.d_k)?;
    let outcome = train(
        &loaded.corpus,
        &model_cfg,
        &loaded.queries.vectors,
        &spec.optim,
        spec.seed,
    )?;
    let model = outcome.best.model()?;
    let test_set = loaded.corpus.split(Split::Test);
    let metrics = RunMetrics {
        best_epoch: outcome.best.epoch,
        dev: evaluate(&model, &loaded.corpus.split(Split::Dev))?,
        test: if test_set.is_empty() {
            None
        } else {
            Some(evaluate(&model, &test_set)?)
        },
    };
    create_dir(out)?;
    json::write_file(out.join(RUN_FILE), spec)?;
    outcome.best.write(out.join(CHECKPOINT_FILE))?;
    json::write_lines(out.join(LOG_FILE), &outcome.log)?;
    json::write_file(out.join(METRICS_FILE), &metrics)?;
    Ok(RunResult {
        checkpoint: outcome.best,
        log: outcome.log,
        metrics,
    })
}

/// Loads the experiment's corpus and trains once.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<RunResult> {
    let loaded = load_source(&spec.corpus, spec.seed)?;
    run_training(spec, &loaded, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub tau_mode: TauMode,
    pub rmse: f64,
    pub mae: f64,
    pub ccc: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, mode: TauMode) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.tau_mode == mode)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>8} {:>8} {:>8} {:>6}\n",
            "tau", "RMSE", "MAE", "CCC", "epoch"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>6}\n",
                r.tau_mode.as_str(),
                r.rmse,
                r.mae,
                r.ccc,
                r.best_epoch
            ));
        }
        out
    }
}

/// Trains one model per temperature mode (none, global, per_symptom) from the
/// same seed and data, each in its own thread and subdirectory, and reports
/// test-split metrics.
pub fn run_tau_ablation(spec: &ExperimentSpec, out: &Path) -> Result<AblationTable> {
    spec.validate()?;
    let loaded = load_source(&spec.corpus, spec.seed)?;
    if loaded.corpus.split(Split::Test).is_empty() {
        return Err(Error::InvalidInput("ablation needs a non-empty test split".into()));
    }
    create_dir(out)?;
    json::write_file(out.join(RUN_FILE), spec)?;
    let results: Vec<Result<RunResult>> = thread::scope(|scope| {
        let handles: Vec<_> = TauMode::ALL
            .iter()
            .map(|&mode| {
                let mut run_spec = spec.clone();
                run_spec.model.tau_mode = mode;
                run_spec.out = None;
                let loaded = &loaded;
                let dir = out.join(mode.as_str());
                scope.spawn(move || run_training(&run_spec, loaded, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ablation worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(3);
    for (mode, res) in TauMode::ALL.iter().zip(results) {
        let res = res?;
        let test = res.metrics.test.expect("test split checked above");
        rows.push(AblationRow {
            tau_mode: *mode,
            rmse: test.total.rmse,
            mae: test.total.mae,
            ccc: test.total.ccc,
            best_epoch: res.checkpoint.epoch,
        });
    }
    let table = AblationTable {
        seed: spec.seed,
        rows,
    };
    json::write_file(out.join(ABLATION_FILE), &table)?;
    let path = out.join(ABLATION_TABLE_FILE);
    fs::write(&path, table.to_table()).map_err(|e| Error::io(&path, e))?;
    Ok(table)
}
