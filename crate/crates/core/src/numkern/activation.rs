//! Elementwise kernels and the squared-error loss.

use rand::Rng;

use crate::error::{Error, Result};

fn state_err(kernel: &str) -> Error {
    Error::State(format!("{kernel} backward called before forward"))
}

fn check_len(kernel: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!(
            "{kernel}: expected length {expected}, got {got}"
        )));
    }
    Ok(())
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Logistic function, evaluated on the side that cannot overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ReLU with derivative 0 at exactly 0.
#[derive(Debug, Default)]
pub struct Relu {
    input: Option<Vec<f64>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, x: &[f64]) -> Vec<f64> {
        self.input = Some(x.to_vec());
        relu(x)
    }

    pub fn backward(&self, dout: &[f64], dx: &mut [f64]) -> Result<()> {
        let x = self.input.as_ref().ok_or_else(|| state_err("relu"))?;
        check_len("relu backward", x.len(), dout.len())?;
        check_len("relu backward", x.len(), dx.len())?;
        for ((acc, &g), &v) in dx.iter_mut().zip(dout).zip(x) {
            if v > 0.0 {
                *acc += g;
            }
        }
        Ok(())
    }
}

/// Inverted dropout. Each element survives with probability `1 - p` and is
/// scaled by `1 / (1 - p)`; with no generator the kernel is the identity.
#[derive(Debug, Default)]
pub struct Dropout {
    scale: Option<Vec<f64>>,
}

pub fn check_dropout_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "dropout probability must lie in [0, 1), got {p}"
        )));
    }
    Ok(())
}

impl Dropout {
    pub fn new() -> Self {
        Self::default()
    }

    /// `rng: None` is inference mode.
    pub fn forward<R: Rng>(&mut self, x: &[f64], p: f64, rng: Option<&mut R>) -> Result<Vec<f64>> {
        check_dropout_p(p)?;
        let scale: Vec<f64> = match rng {
            Some(rng) if p > 0.0 => {
                let keep = 1.0 / (1.0 - p);
                (0..x.len())
                    .map(|_| if rng.random::<f64>() >= p { keep } else { 0.0 })
                    .collect()
            }
            _ => vec![1.0; x.len()],
        };
        let out = x.iter().zip(&scale).map(|(v, s)| v * s).collect();
        self.scale = Some(scale);
        Ok(out)
    }

    pub fn backward(&self, dout: &[f64], dx: &mut [f64]) -> Result<()> {
        let scale = self.scale.as_ref().ok_or_else(|| state_err("dropout"))?;
        check_len("dropout backward", scale.len(), dout.len())?;
        check_len("dropout backward", scale.len(), dx.len())?;
        for ((acc, g), s) in dx.iter_mut().zip(dout).zip(scale) {
            *acc += g * s;
        }
        Ok(())
    }
}

/// Elementwise logistic function.
#[derive(Debug, Default)]
pub struct Sigmoid {
    out: Option<Vec<f64>>,
}

impl Sigmoid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, x: &[f64]) -> Vec<f64> {
        let out: Vec<f64> = x.iter().map(|&v| sigmoid(v)).collect();
        self.out = Some(out.clone());
        out
    }

    pub fn backward(&self, dout: &[f64], dx: &mut [f64]) -> Result<()> {
        let y = self.out.as_ref().ok_or_else(|| state_err("sigmoid"))?;
        check_len("sigmoid backward", y.len(), dout.len())?;
        check_len("sigmoid backward", y.len(), dx.len())?;
        for ((acc, g), s) in dx.iter_mut().zip(dout).zip(y) {
            *acc += g * s * (1.0 - s);
        }
        Ok(())
    }
}

/// Mean squared error `(1/n) Σ (pred - target)²`.
#[derive(Debug, Default)]
pub struct Mse {
    cache: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("mse", pred.len(), target.len())?;
    if pred.is_empty() {
        return Err(Error::InvalidInput("mse of empty vectors".into()));
    }
    let s: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(s / pred.len() as f64)
}

impl Mse {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, pred: &[f64], target: &[f64]) -> Result<f64> {
        let loss = mse(pred, target)?;
        self.cache = Some((pred.to_vec(), target.to_vec()));
        Ok(loss)
    }

    /// Accumulates `dloss · ∂mse/∂pred` into `dpred`.
    pub fn backward(&self, dloss: f64, dpred: &mut [f64]) -> Result<()> {
        let (p, t) = self.cache.as_ref().ok_or_else(|| state_err("mse"))?;
        check_len("mse backward", p.len(), dpred.len())?;
        let k = 2.0 * dloss / p.len() as f64;
        for ((acc, pv), tv) in dpred.iter_mut().zip(p).zip(t) {
            *acc += k * (pv - tv);
        }
        Ok(())
    }
}
