use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gradients, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            clip_norm: 1.0,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0
            && self.weight_decay.is_finite()
            && self.clip_norm > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Moment buffers shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub step: u64,
    pub m: ModelParams,
    pub v: ModelParams,
    pub hyper: AdamWConfig,
}

impl OptimState {
    pub fn new(params: &ModelParams, hyper: AdamWConfig) -> Self {
        Self {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
            hyper,
        }
    }
}

fn same_shapes(a: &ModelParams, b: &ModelParams, what: &str) -> Result<()> {
    let (sa, sb) = (a.specs(), b.specs());
    if sa.len() != sb.len() {
        return Err(Error::Dimension(format!(
            "{what}: {} tensors vs {}",
            sa.len(),
            sb.len()
        )));
    }
    for (x, y) in sa.iter().zip(&sb) {
        if x.name != y.name || x.rows != y.rows || x.cols != y.cols {
            return Err(Error::Dimension(format!(
                "{what}: {} is {}x{}, expected {} {}x{}",
                y.name, y.rows, y.cols, x.name, x.rows, x.cols
            )));
        }
    }
    Ok(())
}

/// Scales all gradients jointly so their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> Result<f64> {
    for (spec, g) in grads.specs().iter().zip(grads.slices()) {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient in {} at element {i}: {}",
                spec.name, g[i]
            )));
        }
    }
    let norm = grads.sum_squares().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.slices_mut() {
            g.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(norm)
}

/// One AdamW update with decoupled weight decay on weight tensors only.
pub fn adamw_step(params: &mut ModelParams, grads: &Gradients, state: &mut OptimState) -> Result<()> {
    same_shapes(params, grads, "gradients")?;
    same_shapes(params, &state.m, "first moment")?;
    same_shapes(params, &state.v, "second moment")?;
    let h = state.hyper;
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - h.beta1.powf(t);
    let bc2 = 1.0 - h.beta2.powf(t);
    let specs = params.specs();
    let g_all = grads.slices();
    let m_all = state.m.slices_mut();
    let v_all = state.v.slices_mut();
    let p_all = params.slices_mut();
    for ((((spec, p), g), m), v) in specs.iter().zip(p_all).zip(g_all).zip(m_all).zip(v_all) {
        let decay = if spec.kind.decays() { h.weight_decay } else { 0.0 };
        for i in 0..p.len() {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            let old = p[i];
            p[i] = old - h.lr * m_hat / (v_hat.sqrt() + h.eps) - h.lr * decay * old;
        }
    }
    Ok(())
}
