#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symattn::model::{Model, ModelConfig, TauMode};
use symattn::numkern::Matrix;

pub fn tiny_config(mode: TauMode) -> ModelConfig {
    ModelConfig {
        embed_dim: 6,
        head_hidden: 3,
        dropout_p: 0.0,
        tau_mode: mode,
        ..ModelConfig::default()
    }
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Model with every parameter perturbed away from its initial value so no
/// gradient is trivially zero.
pub fn random_model(config: ModelConfig, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.embed_dim;
    let q = uniform_matrix(&mut rng, 8, d, 1.0);
    let mut model = Model::init(config, &q, seed).unwrap();
    for s in model.params.slices_mut() {
        for v in s.iter_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    model
}

pub fn random_input(seed: u64, rows: usize, d: usize) -> (Matrix, Vec<bool>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let x = uniform_matrix(&mut rng, rows, d, 2.0);
    let mask = vec![true; rows];
    let labels = (0..8).map(|_| rng.random_range(0..=3u8)).collect();
    (x, mask, labels)
}
