//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 numerical failure,
//! 64 usage error. Errors go to standard error as `error_code:<code> <message>`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{load_corpus, generate_synthetic, Dispersion, Split, SynthConfig};
use crate::error::Error;
use crate::harness::{
    find_relevance, run_attention_report, run_experiment, run_tau_ablation, write_synthetic,
    ExperimentSpec,
};
use crate::json;
use crate::metrics::evaluate;
use crate::model::{check_model_gradients, random_problem, ModelConfig, Pass, TauMode};
use crate::numkern::gradcheck::DEFAULT_STEP;
use crate::optim::Checkpoint;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "symattn", version, about = "Symptom-query cross-attention for PHQ-8 regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic planted-evidence corpus.
    Synth(SynthArgs),
    /// Train a model and write checkpoint, log and metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split and print the metrics.
    Eval(EvalArgs),
    /// Export per-participant attention maps and a summary.
    Attend(AttendArgs),
    /// Train once per temperature mode and compare on the test split.
    Ablate(AblateArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 48)]
    train: usize,
    #[arg(long, default_value_t = 16)]
    dev: usize,
    #[arg(long, default_value_t = 16)]
    test: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// uniform or heterogeneous
    #[arg(long, default_value = "uniform", value_parser = parse_dispersion)]
    dispersion: Dispersion,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// none, global or per_symptom; overrides the config.
    #[arg(long, value_parser = parse_tau_mode)]
    tau_mode: Option<TauMode>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// dev or test
    #[arg(long, default_value = "test", value_parser = parse_eval_split)]
    split: Split,
    /// Print the report as JSON instead of a table.
    #[arg(long, default_value_t = false)]
    json: bool,
}

#[derive(Debug, Args)]
struct AttendArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// train, dev or test
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 6)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    segments: usize,
    #[arg(long, default_value_t = 3)]
    hidden: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// none, global or per_symptom
    #[arg(long, default_value = "per_symptom", value_parser = parse_tau_mode)]
    tau_mode: TauMode,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

fn parse_tau_mode(s: &str) -> Result<TauMode, String> {
    TauMode::parse(s).map_err(|e| e.to_string())
}

fn parse_split(s: &str) -> Result<Split, String> {
    Split::parse(s).map_err(|e| e.to_string())
}

fn parse_eval_split(s: &str) -> Result<Split, String> {
    match s {
        "dev" => Ok(Split::Dev),
        "test" => Ok(Split::Test),
        other => Err(format!("expected dev or test, got {other:?}")),
    }
}

fn parse_dispersion(s: &str) -> Result<Dispersion, String> {
    match s {
        "uniform" => Ok(Dispersion::Uniform),
        "heterogeneous" => Ok(Dispersion::Heterogeneous),
        other => Err(format!("expected uniform or heterogeneous, got {other:?}")),
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: e.code().to_string(),
            exit: if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_VALIDATION
            },
            message: e.to_string(),
        }
    }
}

/// Renames a missing-file error to `<what>_not_found`.
fn missing(what: &'static str) -> impl Fn(Error) -> CliError {
    move |e| match e {
        Error::NotFound(path) => CliError {
            code: format!("{what}_not_found"),
            message: format!("{what} {} does not exist", path.display()),
            exit: EXIT_VALIDATION,
        },
        other => other.into(),
    }
}

type CliResult = Result<(), CliError>;

fn output_dir(flag: Option<PathBuf>, spec: &ExperimentSpec) -> Result<PathBuf, CliError> {
    flag.or_else(|| spec.out.clone()).ok_or_else(|| CliError {
        code: "missing_output".into(),
        message: "no output directory: pass --out or set \"out\" in the config".into(),
        exit: EXIT_VALIDATION,
    })
}

fn synth(a: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        seed: a.seed,
        n_train: a.train,
        n_dev: a.dev,
        n_test: a.test,
        d_k: a.dim,
        dispersion: a.dispersion,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic(&cfg)?;
    let manifest = write_synthetic(&cfg, &corpus, &a.out)?;
    println!("wrote {} participants to {}", corpus.corpus.records.len(), manifest.display());
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let mut spec = ExperimentSpec::from_file(&a.config).map_err(missing("config"))?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(mode) = a.tau_mode {
        spec.model.tau_mode = mode;
    }
    let out = output_dir(a.out, &spec)?;
    spec.out = Some(out.clone());
    let res = run_experiment(&spec, &out).map_err(missing("manifest"))?;
    println!(
        "best epoch {} (dev RMSE {:.4}); outputs in {}",
        res.checkpoint.epoch,
        res.checkpoint.dev_rmse,
        out.display()
    );
    if let Some(test) = &res.metrics.test {
        print!("{}", test.to_table());
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Checkpoint::read(path).map_err(missing("checkpoint"))
}

fn eval(a: EvalArgs) -> CliResult {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let corpus = load_corpus(&a.manifest).map_err(missing("manifest"))?;
    if corpus.d_k != ckpt.config.model.embed_dim {
        return Err(Error::Validation(format!(
            "checkpoint expects {}-dimensional embeddings, corpus has {}",
            ckpt.config.model.embed_dim, corpus.d_k
        ))
        .into());
    }
    let model = ckpt.model()?;
    let report = evaluate(&model, &corpus.split(a.split))?;
    if a.json {
        println!("{}", json::to_string(&report)?);
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn attend(a: AttendArgs) -> CliResult {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let corpus = load_corpus(&a.manifest).map_err(missing("manifest"))?;
    let relevance = find_relevance(&a.manifest)?;
    let summary = run_attention_report(&ckpt, &corpus, relevance.as_deref(), a.split, &a.out)?;
    println!(
        "exported {} attention maps to {}",
        summary.n_participants,
        a.out.display()
    );
    if let Some(r) = summary.planted_recovery {
        println!("planted recovery {:.4} ({}/{})", r.rate, r.hits, r.total);
    }
    for e in &summary.entropy {
        println!("{:<14} entropy {:.4}", e.symptom, e.mean_entropy);
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> CliResult {
    let mut spec = ExperimentSpec::from_file(&a.config).map_err(missing("config"))?;
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let out = output_dir(a.out, &spec)?;
    spec.out = Some(out.clone());
    let table = run_tau_ablation(&spec, &out).map_err(missing("manifest"))?;
    print!("{}", table.to_table());
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> CliResult {
    let config = ModelConfig {
        embed_dim: a.dim,
        head_hidden: a.hidden,
        dropout_p: 0.0,
        tau_mode: a.tau_mode,
        ..ModelConfig::default()
    };
    let (model, x, mask, labels) = random_problem(config, a.segments, a.seed)?;
    let check = check_model_gradients(&model, &x, &mask, &labels, Pass::Eval, DEFAULT_STEP)?;
    for (name, cmp) in &check.per_param {
        println!("{name:<12} max_rel_err {:.3e} max_abs_err {:.3e}", cmp.max_rel_err, cmp.max_abs_err);
    }
    println!("max_rel_err {:.6e}", check.overall.max_rel_err);
    if check.overall.passes(a.tol) {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "max relative error {:.3e} exceeds {:.1e}",
            check.overall.max_rel_err, a.tol
        ))
        .into())
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    eprintln!("error_code:usage {}", text.trim_end());
                    EXIT_USAGE
                }
            };
        }
    };
    let res = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Attend(a) => attend(a),
        Command::Ablate(a) => ablate(a),
        Command::Gradcheck(a) => gradcheck(a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error_code:{} {}", e.code, e.message);
            e.exit
        }
    }
}
