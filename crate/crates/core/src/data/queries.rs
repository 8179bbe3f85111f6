use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NUM_SYMPTOMS, SYMPTOM_NAMES};
use crate::numkern::rng::stream_rng;
use crate::numkern::Matrix;

use super::sge1::{read_embedding_file, write_embedding_file};

/// One vector per PHQ-8 item, used to initialise the trainable queries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub vectors: Matrix,
    pub symptom_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct NamesSidecar {
    symptom_names: Vec<String>,
}

fn default_names() -> Vec<String> {
    SYMPTOM_NAMES.iter().map(|s| s.to_string()).collect()
}

impl QuerySet {
    pub fn new(vectors: Matrix) -> Result<Self> {
        if vectors.rows() != NUM_SYMPTOMS {
            return Err(Error::Validation(format!(
                "query set needs {NUM_SYMPTOMS} rows, got {}",
                vectors.rows()
            )));
        }
        Ok(Self {
            vectors,
            symptom_names: default_names(),
        })
    }

    pub fn d_k(&self) -> usize {
        self.vectors.cols()
    }

    /// Sidecar path for a query file: `queries.sge` → `queries.json`.
    pub fn names_path(vectors_path: &Path) -> PathBuf {
        vectors_path.with_extension("json")
    }

    pub fn save(&self, vectors_path: impl AsRef<Path>) -> Result<()> {
        let path = vectors_path.as_ref();
        write_embedding_file(path, &self.vectors)?;
        let names = Self::names_path(path);
        let body = serde_json::to_vec(&NamesSidecar {
            symptom_names: self.symptom_names.clone(),
        })?;
        fs::write(&names, body).map_err(|e| Error::io(&names, e))
    }

    pub fn load(vectors_path: impl AsRef<Path>) -> Result<Self> {
        let path = vectors_path.as_ref();
        let vectors = read_embedding_file(path)?;
        let names_path = Self::names_path(path);
        let text = fs::read_to_string(&names_path).map_err(|e| Error::io(&names_path, e))?;
        let sidecar: NamesSidecar = serde_json::from_str(&text)?;
        if sidecar.symptom_names != default_names() {
            return Err(Error::Validation(format!(
                "{}: symptom names {:?} do not follow the PHQ-8 order {:?}",
                names_path.display(),
                sidecar.symptom_names,
                SYMPTOM_NAMES
            )));
        }
        Self::new(vectors)
    }
}

/// Eight deterministic unit-norm Gaussian directions.
pub fn pseudo_queries(seed: u64, d_k: usize) -> Result<QuerySet> {
    if d_k == 0 {
        return Err(Error::InvalidInput("query dimension must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, "pseudo_queries", 0);
    let mut m = Matrix::zeros(NUM_SYMPTOMS, d_k);
    for r in 0..NUM_SYMPTOMS {
        let row = m.row_mut(r);
        loop {
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
                break;
            }
        }
    }
    QuerySet::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn rows_have_unit_norm() {
        let q = pseudo_queries(3, 17).unwrap();
        for r in 0..8 {
            let n = q.vectors.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(q.symptom_names[0], "no_interest");
    }

    #[test]
    fn seeded() {
        assert_eq!(pseudo_queries(4, 32).unwrap(), pseudo_queries(4, 32).unwrap());
        assert!(pseudo_queries(4, 0).is_err());
    }

    #[test]
    fn different_seeds_are_nearly_orthogonal_in_high_dimension() {
        let a = pseudo_queries(1, 1024).unwrap();
        let b = pseudo_queries(2, 1024).unwrap();
        let worst = (0..8)
            .map(|r| cosine(a.vectors.row(r), b.vectors.row(r)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.5, "{worst}");
    }

    #[test]
    fn save_load_roundtrip_and_name_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("queries.sge");
        let q = pseudo_queries(5, 8).unwrap();
        q.save(&path).unwrap();
        let back = QuerySet::load(&path).unwrap();
        for (a, b) in q.vectors.as_slice().iter().zip(back.vectors.as_slice()) {
            assert_eq!((*a as f32), (*b as f32));
        }
        fs::write(dir.path().join("queries.json"), r#"{"symptom_names":["a"]}"#).unwrap();
        assert!(matches!(QuerySet::load(&path), Err(Error::Validation(_))));
    }
}
