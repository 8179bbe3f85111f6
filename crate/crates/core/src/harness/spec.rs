use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    generate_synthetic, load_corpus, pseudo_queries, write_corpus, Corpus, QuerySet, Relevance,
    SynthConfig, SyntheticCorpus,
};
use crate::error::{Error, Result};
use crate::json;
use crate::model::{ModelConfig, OutputBounding, TauMode, NUM_SYMPTOMS};
use crate::optim::TrainConfig;

/// File written next to a synthetic manifest with the planted segment indices.
pub const RELEVANCE_FILE: &str = "relevance.json";
/// Query file written next to a synthetic manifest.
pub const QUERIES_FILE: &str = "queries.sge";
/// Generator settings echoed next to a synthetic manifest.
pub const SYNTH_CONFIG_FILE: &str = "synth.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSource {
    /// Generated in memory.
    Synthetic(SynthConfig),
    /// A JSON-lines manifest. Relative paths resolve against the config file.
    Manifest {
        manifest: PathBuf,
        /// Query set; pseudo-random queries seeded by the experiment seed
        /// when absent.
        #[serde(default)]
        queries: Option<PathBuf>,
    },
}

/// Model settings; the embedding width defaults to the corpus width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub embed_dim: Option<usize>,
    pub head_hidden: usize,
    pub dropout_p: f64,
    pub tau_mode: TauMode,
    pub output_bounding: OutputBounding,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let c = ModelConfig::default();
        Self {
            embed_dim: None,
            head_hidden: c.head_hidden,
            dropout_p: c.dropout_p,
            tau_mode: c.tau_mode,
            output_bounding: c.output_bounding,
        }
    }
}

impl ModelSpec {
    pub fn resolve(&self, d_k: usize) -> Result<ModelConfig> {
        if let Some(d) = self.embed_dim {
            if d != d_k {
                return Err(Error::Dimension(format!(
                    "model embed_dim {d} does not match corpus width {d_k}"
                )));
            }
        }
        let cfg = ModelConfig {
            embed_dim: d_k,
            num_symptoms: NUM_SYMPTOMS,
            head_hidden: self.head_hidden,
            dropout_p: self.dropout_p,
            tau_mode: self.tau_mode,
            output_bounding: self.output_bounding,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub corpus: CorpusSource,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub optim: TrainConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_seed() -> u64 {
    7
}

impl ExperimentSpec {
    pub fn synthetic(cfg: SynthConfig) -> Self {
        Self {
            seed: cfg.seed,
            corpus: CorpusSource::Synthetic(cfg),
            model: ModelSpec::default(),
            optim: TrainConfig::default(),
            out: None,
        }
    }

    /// Parses a config file; relative corpus paths are made relative to the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let CorpusSource::Manifest { manifest, queries } = &mut spec.corpus {
            *manifest = rebase(base, manifest);
            if let Some(q) = queries {
                *q = rebase(base, q);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.optim.validate()
    }
}

fn rebase(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() || base.as_os_str().is_empty() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A corpus ready for training, with its queries and, when known, the
/// planted relevance sets.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub queries: QuerySet,
    pub relevance: Option<Vec<Relevance>>,
}

/// Reads `relevance.json` from the manifest's directory if it exists.
pub fn find_relevance(manifest: &Path) -> Result<Option<Vec<Relevance>>> {
    let path = manifest
        .parent()
        .unwrap_or(Path::new(""))
        .join(RELEVANCE_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut rel: Vec<Relevance> = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    rel.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Some(rel))
}

/// Writes a generated corpus as manifest, SGE1 files, query set and
/// relevance sets. Returns the manifest path.
pub fn write_synthetic(cfg: &SynthConfig, synth: &SyntheticCorpus, dir: &Path) -> Result<PathBuf> {
    let manifest = write_corpus(&synth.corpus, dir)?;
    synth.queries.save(dir.join(QUERIES_FILE))?;
    json::write_file(dir.join(RELEVANCE_FILE), &synth.relevance)?;
    json::write_file(dir.join(SYNTH_CONFIG_FILE), cfg)?;
    Ok(manifest)
}

pub fn load_source(source: &CorpusSource, seed: u64) -> Result<LoadedCorpus> {
    match source {
        CorpusSource::Synthetic(cfg) => {
            let s = generate_synthetic(cfg)?;
            Ok(LoadedCorpus {
                corpus: s.corpus,
                queries: s.queries,
                relevance: Some(s.relevance),
            })
        }
        CorpusSource::Manifest { manifest, queries } => {
            let corpus = load_corpus(manifest)?;
            let queries = match queries {
                Some(q) => QuerySet::load(q)?,
                None => pseudo_queries(seed, corpus.d_k)?,
            };
            if queries.d_k() != corpus.d_k {
                return Err(Error::Validation(format!(
                    "query width {} does not match corpus width {}",
                    queries.d_k(),
                    corpus.d_k
                )));
            }
            Ok(LoadedCorpus {
                relevance: find_relevance(manifest)?,
                corpus,
                queries,
            })
        }
    }
}
