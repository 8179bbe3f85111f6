//! Experiment orchestration: training runs, the temperature ablation and
//! attention reports.

mod attention;
mod run;
mod spec;

pub use attention::{
    run_attention_report, AttentionSummary, Recovery, SymptomEntropy, ATTENTION_DIR,
    ATTENTION_SUMMARY_FILE,
};
pub use run::{
    run_experiment, run_tau_ablation, run_training, AblationRow, AblationTable, RunMetrics,
    RunResult, ABLATION_FILE, ABLATION_TABLE_FILE, CHECKPOINT_FILE, LOG_FILE, METRICS_FILE,
    RUN_FILE,
};
pub use spec::{
    find_relevance, load_source, CorpusSource, ExperimentSpec, LoadedCorpus, ModelSpec,
    write_synthetic, QUERIES_FILE, RELEVANCE_FILE, SYNTH_CONFIG_FILE,
};
