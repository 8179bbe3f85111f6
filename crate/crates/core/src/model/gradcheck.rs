//! Whole-model finite-difference verification.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numkern::gradcheck::{compare_gradients, GradComparison};
use crate::numkern::mse;
use crate::numkern::rng::stream_rng;
use crate::numkern::Matrix;

use super::config::{ModelConfig, NUM_SYMPTOMS};
use super::network::{Model, Pass};

#[derive(Debug, Clone)]
pub struct ModelGradCheck {
    pub per_param: Vec<(String, GradComparison)>,
    pub overall: GradComparison,
}

/// A model with every parameter nudged off its initial value, plus a random
/// fully unmasked input of `segments` rows and random labels.
pub fn random_problem(
    config: ModelConfig,
    segments: usize,
    seed: u64,
) -> Result<(Model, Matrix, Vec<bool>, Vec<u8>)> {
    if segments == 0 {
        return Err(Error::InvalidInput("need at least one segment".into()));
    }
    config.validate()?;
    let d = config.embed_dim;
    let mut rng = stream_rng(seed, "gradcheck", 0);
    let mut uniform = |rows: usize, scale: f64| {
        let data = (0..rows * d).map(|_| rng.random_range(-scale..scale)).collect();
        Matrix::from_vec(rows, d, data)
    };
    let queries = uniform(NUM_SYMPTOMS, 1.0)?;
    let x = uniform(segments, 2.0)?;
    let mut model = Model::init(config, &queries, seed)?;
    for s in model.params.slices_mut() {
        for v in s.iter_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let labels = (0..NUM_SYMPTOMS).map(|_| rng.random_range(0..=3u8)).collect();
    Ok((model, x, vec![true; segments], labels))
}

/// Loss evaluated by a plain forward pass; never touches backward code.
fn forward_loss(model: &Model, segments: &Matrix, mask: &[bool], labels: &[u8], pass: Pass) -> Result<f64> {
    let out = model.forward(segments, mask, pass)?;
    let targets: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    mse(&out.symptom_scores, &targets)
}

/// Compares `Model::backward` against central differences with step `h` on
/// every scalar parameter.
pub fn check_model_gradients(
    model: &Model,
    segments: &Matrix,
    mask: &[bool],
    labels: &[u8],
    pass: Pass,
    h: f64,
) -> Result<ModelGradCheck> {
    let analytic = model.backward(segments, mask, labels, pass)?.grads;
    let specs = model.params.specs();
    let mut probe = model.clone();
    let mut per_param = Vec::with_capacity(specs.len());
    let mut overall = GradComparison::default();

    for (t, spec) in specs.iter().enumerate() {
        let mut numeric = Vec::with_capacity(spec.len());
        for i in 0..spec.len() {
            let orig = probe.params.slices()[t][i];
            probe.params.slices_mut()[t][i] = orig + h;
            let plus = forward_loss(&probe, segments, mask, labels, pass)?;
            probe.params.slices_mut()[t][i] = orig - h;
            let minus = forward_loss(&probe, segments, mask, labels, pass)?;
            probe.params.slices_mut()[t][i] = orig;
            numeric.push((plus - minus) / (2.0 * h));
        }
        let cmp = compare_gradients(analytic.slices()[t], &numeric);
        overall = overall.merge(cmp);
        per_param.push((spec.name.clone(), cmp));
    }
    Ok(ModelGradCheck { per_param, overall })
}
