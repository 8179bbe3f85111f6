//! Deterministic synthetic corpus with planted per-symptom evidence.
//!
//! Eight orthonormal signature directions `u_s` are drawn once per seed. For
//! a participant with `N` segments and item labels `y_s`, symptom `s` plants
//! evidence `u_s · (1 + y_s)` into `ceil(y_s · N / 12)` randomly chosen
//! segments (symptoms may share a segment; contributions add). Segments that
//! carry evidence get low-variance noise, the rest are isotropic background
//! noise. Query vectors are the signatures plus a little noise.
//!
//! All values are rounded to `f32` so the in-memory corpus matches what an
//! SGE1 round trip produces.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NUM_SYMPTOMS;
use crate::numkern::rng::stream_rng;
use crate::numkern::Matrix;

use super::corpus::{Corpus, ParticipantRecord, Split};
use super::queries::QuerySet;

/// How evidence is spread across segments, per symptom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// Every symptom follows the `ceil(y·N/12)` rule.
    Uniform,
    /// Sleep and tiredness spread weak evidence over many segments; depressed
    /// mood and psychomotor changes put strong evidence in one segment; the
    /// rest follow the uniform rule.
    Heterogeneous,
}

/// Planting rule of a single symptom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantStyle {
    Standard,
    /// Twice the segments, half the amplitude, on top of background noise.
    Diffuse,
    /// A single segment whenever the label is positive.
    Concentrated,
}

impl Dispersion {
    pub fn style(self, symptom: usize) -> PlantStyle {
        match (self, symptom) {
            (Dispersion::Uniform, _) => PlantStyle::Standard,
            (Dispersion::Heterogeneous, 2 | 3) => PlantStyle::Diffuse,
            (Dispersion::Heterogeneous, 1 | 7) => PlantStyle::Concentrated,
            (Dispersion::Heterogeneous, _) => PlantStyle::Standard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseLevels {
    /// Per-coordinate std of noise on segments carrying evidence.
    pub planted: f64,
    /// Per-coordinate std of background segments.
    pub background: f64,
    /// Per-coordinate std added to signatures to form queries.
    pub query: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            planted: 0.1,
            background: 1.0,
            query: 0.05,
        }
    }
}

impl NoiseLevels {
    /// No noise at all: background segments are exactly zero.
    pub fn noise_free() -> Self {
        Self {
            planted: 0.0,
            background: 0.0,
            query: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub d_k: usize,
    pub segments_min: usize,
    pub segments_max: usize,
    pub dispersion: Dispersion,
    pub noise: NoiseLevels,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_train: 48,
            n_dev: 16,
            n_test: 16,
            d_k: 64,
            segments_min: 20,
            segments_max: 120,
            dispersion: Dispersion::Uniform,
            noise: NoiseLevels::default(),
        }
    }
}

impl SynthConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Planted segment indices for one participant, per symptom, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relevance {
    pub id: String,
    pub relevant: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub queries: QuerySet,
    /// The orthonormal directions `u_s`, one per row.
    pub signatures: Matrix,
    /// Sorted by participant id.
    pub relevance: Vec<Relevance>,
}

impl SyntheticCorpus {
    pub fn relevance_of(&self, id: &str) -> Option<&Relevance> {
        self.relevance
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.relevance[i])
    }
}

/// Number of segments carrying evidence under the standard rule.
pub fn planted_count(label: u8, n: usize) -> usize {
    (label as usize * n).div_ceil(12)
}

fn plant_count(style: PlantStyle, label: u8, n: usize) -> usize {
    match style {
        PlantStyle::Standard => planted_count(label, n),
        PlantStyle::Diffuse => (2 * planted_count(label, n)).min(n),
        PlantStyle::Concentrated => usize::from(label > 0),
    }
}

fn round_f32(m: &mut Matrix) {
    for v in m.as_mut_slice() {
        *v = *v as f32 as f64;
    }
}

/// Gram-Schmidt on Gaussian draws.
fn orthonormal_signatures(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let mut u = Matrix::zeros(NUM_SYMPTOMS, d);
    let mut r = 0;
    while r < NUM_SYMPTOMS {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for prev in 0..r {
            let p = u.row(prev);
            let dot: f64 = v.iter().zip(p).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(p).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        u.row_mut(r)
            .iter_mut()
            .zip(&v)
            .for_each(|(dst, x)| *dst = x / norm);
        r += 1;
    }
    u
}

fn normal(std: f64) -> Option<Normal<f64>> {
    (std > 0.0).then(|| Normal::new(0.0, std).expect("positive std"))
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    if cfg.d_k < NUM_SYMPTOMS {
        return Err(Error::InvalidInput(format!(
            "need d_k >= {NUM_SYMPTOMS} for orthonormal signatures, got {}",
            cfg.d_k
        )));
    }
    if cfg.n_train == 0 || cfg.n_dev == 0 || cfg.n_test == 0 {
        return Err(Error::InvalidInput("every split needs at least one participant".into()));
    }
    if cfg.segments_min == 0 || cfg.segments_min > cfg.segments_max {
        return Err(Error::InvalidInput(format!(
            "bad segment range [{}, {}]",
            cfg.segments_min, cfg.segments_max
        )));
    }
    let d = cfg.d_k;
    let mut rng = stream_rng(cfg.seed, "synthetic", 0);
    let signatures = orthonormal_signatures(&mut rng, d);

    let mut qv = signatures.clone();
    if let Some(n) = normal(cfg.noise.query) {
        qv.as_mut_slice().iter_mut().for_each(|v| *v += n.sample(&mut rng));
    }
    round_f32(&mut qv);
    let queries = QuerySet::new(qv)?;

    let planted_noise = normal(cfg.noise.planted);
    let background_noise = normal(cfg.noise.background);

    let mut records = Vec::new();
    let mut relevance = Vec::new();
    for (split, count) in [
        (Split::Train, cfg.n_train),
        (Split::Dev, cfg.n_dev),
        (Split::Test, cfg.n_test),
    ] {
        for i in 0..count {
            let id = format!("{}_{i:03}", split.as_str());
            let n = rng.random_range(cfg.segments_min..=cfg.segments_max);
            let labels: [u8; NUM_SYMPTOMS] = std::array::from_fn(|_| rng.random_range(0..=3u8));

            let mut signal = Matrix::zeros(n, d);
            // whether a segment carries strong (non-diffuse) evidence
            let mut strong = vec![false; n];
            let mut relevant = Vec::with_capacity(NUM_SYMPTOMS);
            for (s, &y) in labels.iter().enumerate() {
                let style = cfg.dispersion.style(s);
                let k = plant_count(style, y, n);
                let mut idx = sample(&mut rng, n, k).into_vec();
                idx.sort_unstable();
                let amp = match style {
                    PlantStyle::Diffuse => 0.5 * (1.0 + y as f64),
                    _ => 1.0 + y as f64,
                };
                for &row in &idx {
                    if style != PlantStyle::Diffuse {
                        strong[row] = true;
                    }
                    signal
                        .row_mut(row)
                        .iter_mut()
                        .zip(signatures.row(s))
                        .for_each(|(dst, u)| *dst += amp * u);
                }
                relevant.push(idx);
            }
            let mut segments = signal;
            for (row, &is_strong) in strong.iter().enumerate() {
                let noise = if is_strong { planted_noise } else { background_noise };
                if let Some(dist) = noise {
                    segments
                        .row_mut(row)
                        .iter_mut()
                        .for_each(|v| *v += dist.sample(&mut rng));
                }
            }
            round_f32(&mut segments);
            records.push(ParticipantRecord {
                id: id.clone(),
                segments,
                labels,
                split,
                segment_ids: None,
            });
            relevance.push(Relevance { id, relevant });
        }
    }
    relevance.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(SyntheticCorpus {
        corpus: Corpus::new(records)?,
        queries,
        signatures,
        relevance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_train: 6,
            n_dev: 3,
            n_test: 3,
            d_k: 16,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn planted_count_rule() {
        assert_eq!(planted_count(0, 50), 0);
        assert_eq!(planted_count(1, 50), 5);
        assert_eq!(planted_count(2, 24), 4);
        assert_eq!(planted_count(3, 21), 6);
    }

    #[test]
    fn signatures_are_orthonormal() {
        let s = generate_synthetic(&small()).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = s
                    .signatures
                    .row(a)
                    .iter()
                    .zip(s.signatures.row(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_dimension_rejected() {
        let cfg = SynthConfig {
            d_k: 7,
            ..small()
        };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        let c = generate_synthetic(&small().with_seed(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn split_sizes_and_ranges() {
        let s = generate_synthetic(&small()).unwrap();
        assert_eq!(s.corpus.split_sizes(), [6, 3, 3]);
        for r in &s.corpus.records {
            assert!((20..=120).contains(&r.num_segments()));
            assert!(r.total_label() <= 24);
            let rel = s.relevance_of(&r.id).unwrap();
            for (sym, idx) in rel.relevant.iter().enumerate() {
                assert_eq!(idx.len(), planted_count(r.labels[sym], r.num_segments()));
            }
        }
    }

    #[test]
    fn heterogeneous_counts_follow_style() {
        let cfg = SynthConfig {
            dispersion: Dispersion::Heterogeneous,
            ..small()
        };
        let s = generate_synthetic(&cfg).unwrap();
        for r in &s.corpus.records {
            let rel = s.relevance_of(&r.id).unwrap();
            let n = r.num_segments();
            for (sym, idx) in rel.relevant.iter().enumerate() {
                let y = r.labels[sym];
                let expect = match sym {
                    2 | 3 => (2 * planted_count(y, n)).min(n),
                    1 | 7 => usize::from(y > 0),
                    _ => planted_count(y, n),
                };
                assert_eq!(idx.len(), expect);
            }
        }
    }
}
