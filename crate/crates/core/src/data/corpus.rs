use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NUM_SYMPTOMS;
use crate::numkern::Matrix;

use super::sge1::{read_embedding_file, write_embedding_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Validation(format!("unknown split {other:?}"))),
        }
    }
}

/// One interview: segment embeddings and PHQ-8 item labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantRecord {
    pub id: String,
    pub segments: Matrix,
    pub labels: [u8; NUM_SYMPTOMS],
    pub split: Split,
    pub segment_ids: Option<Vec<String>>,
}

impl ParticipantRecord {
    pub fn num_segments(&self) -> usize {
        self.segments.rows()
    }

    pub fn total_label(&self) -> u32 {
        self.labels.iter().map(|&l| l as u32).sum()
    }

    pub fn mask(&self) -> Vec<bool> {
        vec![true; self.segments.rows()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.rows() == 0 {
            return Err(Error::Validation(format!("record {}: no segments", self.id)));
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l > 3) {
            return Err(Error::Validation(format!(
                "record {}: label {bad} outside 0..=3",
                self.id
            )));
        }
        if let Some(ids) = &self.segment_ids {
            if ids.len() != self.segments.rows() {
                return Err(Error::Validation(format!(
                    "record {}: {} segment ids for {} segments",
                    self.id,
                    ids.len(),
                    self.segments.rows()
                )));
            }
        }
        Ok(())
    }
}

/// Records sorted by id, all sharing one embedding width.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<ParticipantRecord>,
    pub d_k: usize,
}

impl Corpus {
    pub fn new(mut records: Vec<ParticipantRecord>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Validation("empty corpus".into()))?;
        let d_k = first.segments.cols();
        let mut ids = BTreeSet::new();
        for r in &records {
            r.validate()?;
            if r.segments.cols() != d_k {
                return Err(Error::Validation(format!(
                    "record {}: embedding width {} differs from corpus width {d_k}",
                    r.id,
                    r.segments.cols()
                )));
            }
            if !ids.insert(r.id.clone()) {
                return Err(Error::Validation(format!("duplicate record id {}", r.id)));
            }
        }
        records.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { records, d_k })
    }

    pub fn split(&self, split: Split) -> Vec<&ParticipantRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    /// Counts for train, dev and test.
    pub fn split_sizes(&self) -> [usize; 3] {
        Split::ALL.map(|s| self.records.iter().filter(|r| r.split == s).count())
    }

    pub fn get(&self, id: &str) -> Option<&ParticipantRecord> {
        self.records
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.records[i])
    }
}

/// One line of the JSON-lines manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub embedding_path: String,
    pub labels: Vec<i64>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_ids: Option<Vec<String>>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn read_manifest(manifest_path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = manifest_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| {
            Error::Validation(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Loads every record named by a JSON-lines manifest. Embedding paths are
/// resolved against the manifest's directory.
pub fn load_corpus(manifest_path: impl AsRef<Path>) -> Result<Corpus> {
    let path = manifest_path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(path)?;
    if entries.is_empty() {
        return Err(Error::Validation(format!(
            "{}: empty corpus",
            path.display()
        )));
    }
    let mut records = Vec::with_capacity(entries.len());
    for e in entries {
        if e.labels.len() != NUM_SYMPTOMS {
            return Err(Error::Validation(format!(
                "record {}: {} labels, expected {NUM_SYMPTOMS}",
                e.id,
                e.labels.len()
            )));
        }
        if let Some(bad) = e.labels.iter().find(|&&l| !(0..=3).contains(&l)) {
            return Err(Error::Validation(format!(
                "record {}: label {bad} outside 0..=3",
                e.id
            )));
        }
        let labels = std::array::from_fn(|i| e.labels[i] as u8);
        let segments = read_embedding_file(resolve(base, &e.embedding_path))?;
        records.push(ParticipantRecord {
            id: e.id,
            segments,
            labels,
            split: e.split,
            segment_ids: e.segment_ids,
        });
    }
    Corpus::new(records)
}

/// Writes `embeddings/<id>.sge` files plus `manifest.jsonl` under `dir`.
/// Returns the manifest path.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let emb_dir = dir.join("embeddings");
    fs::create_dir_all(&emb_dir).map_err(|e| Error::io(&emb_dir, e))?;
    let manifest_path = dir.join("manifest.jsonl");
    let mut out = Vec::new();
    for r in &corpus.records {
        let rel = format!("embeddings/{}.sge", r.id);
        write_embedding_file(dir.join(&rel), &r.segments)?;
        let entry = ManifestEntry {
            id: r.id.clone(),
            embedding_path: rel,
            labels: r.labels.iter().map(|&l| l as i64).collect(),
            split: r.split,
            segment_ids: r.segment_ids.clone(),
        };
        serde_json::to_writer(&mut out, &entry)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    f.write_all(&out).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
