use rand::Rng;

use crate::error::{Error, Result};
use crate::numkern::rng::stream_rng;
use crate::numkern::Matrix;

use super::config::{ModelConfig, NUM_SYMPTOMS};

/// What a tensor is, for weight-decay and freezing decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    Norm,
    Temperature,
}

impl ParamKind {
    /// Decoupled weight decay applies to weights and queries only.
    pub fn decays(self) -> bool {
        self == ParamKind::Weight
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerNormParams {
    pub fn identity(d: usize) -> Self {
        Self {
            gain: vec![1.0; d],
            bias: vec![0.0; d],
        }
    }
}

/// Two-layer regression head: `w2 · dropout(relu(w1 c + b1)) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// `head_hidden × embed_dim`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Every trainable tensor. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `8 × embed_dim`
    pub queries: Matrix,
    pub ln_q: LayerNormParams,
    pub ln_k: LayerNormParams,
    pub ln_v: LayerNormParams,
    /// Log-temperatures; empty, one shared, or one per symptom.
    pub rho: Vec<f64>,
    pub heads: Vec<HeadParams>,
}

pub type Gradients = ModelParams;

impl ModelParams {
    /// Initial parameters: queries copied from `queries`, identity LayerNorms,
    /// `ρ = 0`, head weights uniform in `±sqrt(1/fan_in)` and zero biases.
    ///
    /// Head weights are drawn from `seed` independently of the tau mode, so
    /// configurations that differ only in tau mode start from the same point.
    pub fn init(config: &ModelConfig, queries: &Matrix, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.embed_dim;
        let h = config.head_hidden;
        queries.ensure_shape(NUM_SYMPTOMS, d, "query initialisation")?;
        let mut rng = stream_rng(seed, "head_init", 0);
        let bound1 = (1.0 / d as f64).sqrt();
        let bound2 = (1.0 / h as f64).sqrt();
        let heads = (0..NUM_SYMPTOMS)
            .map(|_| {
                let w1 = (0..h * d).map(|_| rng.random_range(-bound1..bound1)).collect();
                let w2 = (0..h).map(|_| rng.random_range(-bound2..bound2)).collect();
                HeadParams {
                    w1: Matrix::from_vec(h, d, w1).expect("sized"),
                    b1: vec![0.0; h],
                    w2,
                    b2: 0.0,
                }
            })
            .collect();
        Ok(Self {
            queries: queries.clone(),
            ln_q: LayerNormParams::identity(d),
            ln_k: LayerNormParams::identity(d),
            ln_v: LayerNormParams::identity(d),
            rho: vec![0.0; config.tau_mode.param_count()],
            heads,
        })
    }

    /// All-zero tensors shaped for `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.embed_dim;
        let h = config.head_hidden;
        let zero_ln = LayerNormParams {
            gain: vec![0.0; d],
            bias: vec![0.0; d],
        };
        Self {
            queries: Matrix::zeros(NUM_SYMPTOMS, d),
            ln_q: zero_ln.clone(),
            ln_k: zero_ln.clone(),
            ln_v: zero_ln,
            rho: vec![0.0; config.tau_mode.param_count()],
            heads: (0..NUM_SYMPTOMS)
                .map(|_| HeadParams {
                    w1: Matrix::zeros(h, d),
                    b1: vec![0.0; h],
                    w2: vec![0.0; h],
                    b2: 0.0,
                })
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }

    /// Names, shapes and kinds in canonical (checkpoint) order.
    pub fn specs(&self) -> Vec<ParamSpec> {
        let d = self.queries.cols();
        let spec = |name: String, rows, cols, kind| ParamSpec {
            name,
            rows,
            cols,
            kind,
        };
        let mut out = vec![spec("queries".into(), self.queries.rows(), d, ParamKind::Weight)];
        for (tag, ln) in [("ln_q", &self.ln_q), ("ln_k", &self.ln_k), ("ln_v", &self.ln_v)] {
            out.push(spec(format!("{tag}.gain"), 1, ln.gain.len(), ParamKind::Norm));
            out.push(spec(format!("{tag}.bias"), 1, ln.bias.len(), ParamKind::Norm));
        }
        if !self.rho.is_empty() {
            out.push(spec("rho".into(), 1, self.rho.len(), ParamKind::Temperature));
        }
        for (s, head) in self.heads.iter().enumerate() {
            out.push(spec(format!("head{s}.w1"), head.w1.rows(), head.w1.cols(), ParamKind::Weight));
            out.push(spec(format!("head{s}.b1"), 1, head.b1.len(), ParamKind::Bias));
            out.push(spec(format!("head{s}.w2"), 1, head.w2.len(), ParamKind::Weight));
            out.push(spec(format!("head{s}.b2"), 1, 1, ParamKind::Bias));
        }
        out
    }

    /// Tensor contents in the same order as [`specs`](Self::specs).
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.queries.as_slice()];
        for ln in [&self.ln_q, &self.ln_k, &self.ln_v] {
            out.push(&ln.gain);
            out.push(&ln.bias);
        }
        if !self.rho.is_empty() {
            out.push(&self.rho);
        }
        for head in &self.heads {
            out.push(head.w1.as_slice());
            out.push(&head.b1);
            out.push(&head.w2);
            out.push(std::slice::from_ref(&head.b2));
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.queries.as_mut_slice()];
        for ln in [&mut self.ln_q, &mut self.ln_k, &mut self.ln_v] {
            out.push(&mut ln.gain);
            out.push(&mut ln.bias);
        }
        if !self.rho.is_empty() {
            out.push(&mut self.rho);
        }
        for head in &mut self.heads {
            out.push(head.w1.as_mut_slice());
            out.push(&mut head.b1);
            out.push(&mut head.w2);
            out.push(std::slice::from_mut(&mut head.b2));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Checks every tensor against the shapes `config` implies.
    pub fn check_config(&self, config: &ModelConfig) -> Result<()> {
        let expected = ModelParams::zeros(config).specs();
        let actual = self.specs();
        if expected.len() != actual.len() {
            return Err(Error::Dimension(format!(
                "parameter set has {} tensors, config implies {}",
                actual.len(),
                expected.len()
            )));
        }
        for (e, a) in expected.iter().zip(&actual) {
            if e.name != a.name || e.rows != a.rows || e.cols != a.cols {
                return Err(Error::Dimension(format!(
                    "parameter {} is {}x{}, config implies {} {}x{}",
                    a.name, a.rows, a.cols, e.name, e.rows, e.cols
                )));
            }
        }
        Ok(())
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Divides every entry by `n`.
    pub fn div_scalar(&mut self, n: f64) {
        for s in self.slices_mut() {
            for v in s.iter_mut() {
                *v /= n;
            }
        }
    }

    pub fn sum_squares(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum()
    }

    /// Temperatures `τ = exp(ρ)` as seen by each symptom.
    pub fn taus(&self) -> [f64; NUM_SYMPTOMS] {
        match self.rho.len() {
            0 => [1.0; NUM_SYMPTOMS],
            1 => [self.rho[0].exp(); NUM_SYMPTOMS],
            _ => std::array::from_fn(|s| self.rho[s].exp()),
        }
    }
}
