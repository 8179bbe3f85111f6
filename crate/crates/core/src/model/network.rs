//! Forward and backward passes of the symptom-guided cross-attention network.
//!
//! For one participant with segment matrix `X` (`N × d`):
//!
//! ```text
//! Q = LN_q(queries)            K = LN_k(X)            V = LN_v(X)
//! a_s = softmax(q_s Kᵀ / (τ_s √d))     over unmasked segments
//! c_s = a_s V
//! y_s = bound(w2_s · dropout(relu(W1_s c_s + b1_s)) + b2_s)
//! total = Σ_s y_s
//! ```
//!
//! Masked segments are removed before any arithmetic, so padding never
//! changes a single bit of the result.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numkern::rng::DropoutKey;
use crate::numkern::{sigmoid, Dropout, LayerNorm, MatMul, Matrix, Mse, Relu, SoftmaxTemp};

use super::config::{ModelConfig, OutputBounding, TauMode, MAX_ITEM_SCORE, NUM_SYMPTOMS};
use super::params::{Gradients, ModelParams};

/// Training passes carry the dropout key; evaluation passes disable dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Eval,
    Train(DropoutKey),
}

/// Attention of every symptom over every segment (`8 × N`).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub weights: Matrix,
    pub segment_ids: Vec<String>,
}

impl AttentionMap {
    pub fn num_segments(&self) -> usize {
        self.weights.cols()
    }

    pub fn row(&self, symptom: usize) -> &[f64] {
        self.weights.row(symptom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub symptom_scores: [f64; NUM_SYMPTOMS],
    pub total: f64,
    pub attention: AttentionMap,
}

#[derive(Debug, Clone)]
pub struct BackwardOutput {
    pub loss: f64,
    pub grads: Gradients,
    pub output: ForwardOutput,
}

/// Configuration plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

struct HeadTrace {
    context: Vec<f64>,
    relu: Relu,
    dropout: Dropout,
    hidden: Vec<f64>,
    raw: f64,
}

struct Trace {
    kept: usize,
    ln_q: LayerNorm,
    ln_k: LayerNorm,
    ln_v: LayerNorm,
    scores: MatMul,
    softmax: Vec<SoftmaxTemp>,
    mix: MatMul,
    heads: Vec<HeadTrace>,
    taus: [f64; NUM_SYMPTOMS],
}

pub fn check_labels(labels: &[u8]) -> Result<()> {
    if labels.len() != NUM_SYMPTOMS {
        return Err(Error::InvalidInput(format!(
            "expected {NUM_SYMPTOMS} labels, got {}",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 3) {
        return Err(Error::InvalidInput(format!(
            "label {bad} outside the item range 0..=3"
        )));
    }
    Ok(())
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        params.check_config(&config)?;
        Ok(Self { config, params })
    }

    /// Fresh model with the standard initialisation.
    pub fn init(config: ModelConfig, queries: &Matrix, seed: u64) -> Result<Self> {
        let params = ModelParams::init(&config, queries, seed)?;
        Self::new(config, params)
    }

    pub fn forward(&self, segments: &Matrix, mask: &[bool], pass: Pass) -> Result<ForwardOutput> {
        self.run(segments, mask, pass).map(|(out, _)| out)
    }

    /// Forward pass plus exact gradients of `(1/8) Σ_s (y_s - label_s)²`.
    pub fn backward(
        &self,
        segments: &Matrix,
        mask: &[bool],
        labels: &[u8],
        pass: Pass,
    ) -> Result<BackwardOutput> {
        check_labels(labels)?;
        let (output, trace) = self.run(segments, mask, pass)?;
        let targets: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let mut mse = Mse::new();
        let loss = mse.forward(&output.symptom_scores, &targets)?;
        let mut dscores = vec![0.0; NUM_SYMPTOMS];
        mse.backward(1.0, &mut dscores)?;
        let grads = self.backprop(&trace, &dscores)?;
        Ok(BackwardOutput {
            loss,
            grads,
            output,
        })
    }

    fn validate_input(&self, segments: &Matrix, mask: &[bool]) -> Result<Vec<usize>> {
        let d = self.config.embed_dim;
        if segments.cols() != d {
            return Err(Error::Dimension(format!(
                "segments have width {}, model expects {d}",
                segments.cols()
            )));
        }
        if segments.rows() == 0 {
            return Err(Error::InvalidInput("participant has no segments".into()));
        }
        if mask.len() != segments.rows() {
            return Err(Error::Dimension(format!(
                "mask of length {} for {} segments",
                mask.len(),
                segments.rows()
            )));
        }
        let kept: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        if kept.is_empty() {
            return Err(Error::InvalidInput("every segment is masked".into()));
        }
        Ok(kept)
    }

    fn run(&self, segments: &Matrix, mask: &[bool], pass: Pass) -> Result<(ForwardOutput, Trace)> {
        let kept = self.validate_input(segments, mask)?;
        let p = &self.params;
        let d = self.config.embed_dim;
        let inv_sqrt_d = 1.0 / (d as f64).sqrt();
        let taus = p.taus();

        let x = segments.select_rows(&kept);
        let mut ln_q = LayerNorm::default();
        let mut ln_k = LayerNorm::default();
        let mut ln_v = LayerNorm::default();
        let q = ln_q.forward(&p.queries, &p.ln_q.gain, &p.ln_q.bias)?;
        let k = ln_k.forward(&x, &p.ln_k.gain, &p.ln_k.bias)?;
        let v = ln_v.forward(&x, &p.ln_v.gain, &p.ln_v.bias)?;

        let mut scores = MatMul::new();
        let mut logits = scores.forward(&q, &k.transpose())?;
        logits.scale(inv_sqrt_d);

        let all = vec![true; kept.len()];
        let mut attn = Matrix::zeros(NUM_SYMPTOMS, kept.len());
        let mut softmax = Vec::with_capacity(NUM_SYMPTOMS);
        for s in 0..NUM_SYMPTOMS {
            let mut op = SoftmaxTemp::new();
            let row = op.forward(logits.row(s), taus[s], &all)?;
            attn.row_mut(s).copy_from_slice(&row);
            softmax.push(op);
        }

        let mut mix = MatMul::new();
        let context = mix.forward(&attn, &v)?;

        let mut heads = Vec::with_capacity(NUM_SYMPTOMS);
        let mut symptom_scores = [0.0; NUM_SYMPTOMS];
        for (s, head) in p.heads.iter().enumerate() {
            let c = context.row(s);
            let pre: Vec<f64> = (0..head.b1.len())
                .map(|j| {
                    let w = head.w1.row(j);
                    let mut acc = 0.0;
                    for (a, b) in w.iter().zip(c) {
                        acc += a * b;
                    }
                    acc + head.b1[j]
                })
                .collect();
            let mut relu = Relu::new();
            let act = relu.forward(&pre);
            let mut dropout = Dropout::new();
            let hidden = match pass {
                Pass::Eval => dropout.forward::<ChaCha8Rng>(&act, self.config.dropout_p, None)?,
                Pass::Train(key) => {
                    let mut rng = key.head_rng(s as u32);
                    dropout.forward(&act, self.config.dropout_p, Some(&mut rng))?
                }
            };
            let mut raw = head.b2;
            for (w, h) in head.w2.iter().zip(&hidden) {
                raw += w * h;
            }
            symptom_scores[s] = self.bound(raw);
            heads.push(HeadTrace {
                context: c.to_vec(),
                relu,
                dropout,
                hidden,
                raw,
            });
        }
        let total: f64 = symptom_scores.iter().sum();
        for (s, y) in symptom_scores.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::Numerical(format!("symptom {s} score is {y}")));
            }
        }

        let mut weights = Matrix::zeros(NUM_SYMPTOMS, segments.rows());
        for s in 0..NUM_SYMPTOMS {
            for (j, &i) in kept.iter().enumerate() {
                weights.set(s, i, attn.get(s, j));
            }
        }
        let output = ForwardOutput {
            symptom_scores,
            total,
            attention: AttentionMap {
                weights,
                segment_ids: (0..segments.rows()).map(|i| i.to_string()).collect(),
            },
        };
        let trace = Trace {
            kept: kept.len(),
            ln_q,
            ln_k,
            ln_v,
            scores,
            softmax,
            mix,
            heads,
            taus,
        };
        Ok((output, trace))
    }

    fn bound(&self, raw: f64) -> f64 {
        match self.config.output_bounding {
            OutputBounding::Sigmoid3 => MAX_ITEM_SCORE * sigmoid(raw),
            OutputBounding::Clamp => raw.clamp(0.0, MAX_ITEM_SCORE),
        }
    }

    fn bound_derivative(&self, raw: f64) -> f64 {
        match self.config.output_bounding {
            OutputBounding::Sigmoid3 => {
                let s = sigmoid(raw);
                MAX_ITEM_SCORE * s * (1.0 - s)
            }
            OutputBounding::Clamp => {
                if raw > 0.0 && raw < MAX_ITEM_SCORE {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn backprop(&self, t: &Trace, dscores: &[f64]) -> Result<Gradients> {
        let p = &self.params;
        let d = self.config.embed_dim;
        let inv_sqrt_d = 1.0 / (d as f64).sqrt();
        let mut g = p.zeros_like();

        let mut dcontext = Matrix::zeros(NUM_SYMPTOMS, d);
        for (s, (head, ht)) in p.heads.iter().zip(&t.heads).enumerate() {
            let draw = dscores[s] * self.bound_derivative(ht.raw);
            let gh = &mut g.heads[s];
            gh.b2 += draw;
            for (gw, h) in gh.w2.iter_mut().zip(&ht.hidden) {
                *gw += draw * h;
            }
            let dhidden: Vec<f64> = head.w2.iter().map(|w| w * draw).collect();
            let mut dact = vec![0.0; dhidden.len()];
            ht.dropout.backward(&dhidden, &mut dact)?;
            let mut dpre = vec![0.0; dact.len()];
            ht.relu.backward(&dact, &mut dpre)?;
            let dc = dcontext.row_mut(s);
            for (j, &dp) in dpre.iter().enumerate() {
                gh.b1[j] += dp;
                if dp == 0.0 {
                    continue;
                }
                let wrow = head.w1.row(j);
                let grow = gh.w1.row_mut(j);
                for i in 0..d {
                    grow[i] += dp * ht.context[i];
                    dc[i] += dp * wrow[i];
                }
            }
        }

        let mut dattn = Matrix::zeros(NUM_SYMPTOMS, t.kept);
        let mut dv = Matrix::zeros(t.kept, d);
        t.mix.backward(&dcontext, &mut dattn, &mut dv)?;

        let mut dlogits = Matrix::zeros(NUM_SYMPTOMS, t.kept);
        for s in 0..NUM_SYMPTOMS {
            let dtau = t.softmax[s].backward(dattn.row(s), dlogits.row_mut(s))?;
            // τ = exp(ρ) ⇒ ∂τ/∂ρ = τ
            match self.config.tau_mode {
                TauMode::None => {}
                TauMode::Global => g.rho[0] += dtau * t.taus[s],
                TauMode::PerSymptom => g.rho[s] += dtau * t.taus[s],
            }
        }
        dlogits.scale(inv_sqrt_d);

        let mut dq = Matrix::zeros(NUM_SYMPTOMS, d);
        let mut dkt = Matrix::zeros(d, t.kept);
        t.scores.backward(&dlogits, &mut dq, &mut dkt)?;

        t.ln_q.backward(&dq, Some(&mut g.queries), &mut g.ln_q.gain, &mut g.ln_q.bias)?;
        t.ln_k.backward(&dkt.transpose(), None, &mut g.ln_k.gain, &mut g.ln_k.bias)?;
        t.ln_v.backward(&dv, None, &mut g.ln_v.gain, &mut g.ln_v.bias)?;
        Ok(g)
    }
}
