use crate::error::{Error, Result};

fn validate(logits: &[f64], tau: f64, mask: &[bool]) -> Result<()> {
    if logits.len() != mask.len() {
        return Err(Error::Dimension(format!(
            "softmax: {} logits but mask of length {}",
            logits.len(),
            mask.len()
        )));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "softmax temperature must be positive and finite, got {tau}"
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::InvalidInput(
            "softmax over a fully masked row".into(),
        ));
    }
    Ok(())
}

/// Softmax of `logits / tau` restricted to positions where `mask` is true.
///
/// Masked positions are exactly zero. The maximum scaled logit is subtracted
/// before exponentiating.
pub fn softmax_temp(logits: &[f64], tau: f64, mask: &[bool]) -> Result<Vec<f64>> {
    validate(logits, tau, mask)?;
    let m = logits
        .iter()
        .zip(mask)
        .filter(|(_, &keep)| keep)
        .map(|(&z, _)| z / tau)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; logits.len()];
    let mut total = 0.0;
    for ((o, &z), &keep) in out.iter_mut().zip(logits).zip(mask) {
        if keep {
            *o = (z / tau - m).exp();
            total += *o;
        }
    }
    for (o, &keep) in out.iter_mut().zip(mask) {
        if keep {
            *o /= total;
        }
    }
    Ok(out)
}

/// Gradient of `L(softmax(z / tau))` given `dL/dout`. Returns `(dL/dz, dL/dtau)`.
pub fn softmax_temp_backward(
    out: &[f64],
    logits: &[f64],
    tau: f64,
    mask: &[bool],
    dout: &[f64],
) -> Result<(Vec<f64>, f64)> {
    if dout.len() != out.len() || logits.len() != out.len() {
        return Err(Error::Dimension(format!(
            "softmax backward: output {} / logits {} / upstream {}",
            out.len(),
            logits.len(),
            dout.len()
        )));
    }
    let mut mean = 0.0;
    for ((&a, &g), &keep) in out.iter().zip(dout).zip(mask) {
        if keep {
            mean += a * g;
        }
    }
    let mut dz = vec![0.0; out.len()];
    let mut dtau = 0.0;
    for i in 0..out.len() {
        if mask[i] {
            // gradient w.r.t. the scaled logit u_i = z_i / tau
            let du = out[i] * (dout[i] - mean);
            dz[i] = du / tau;
            dtau -= du * logits[i];
        }
    }
    Ok((dz, dtau / (tau * tau)))
}

/// Cached single-row temperature softmax.
#[derive(Debug, Default)]
pub struct SoftmaxTemp {
    cache: Option<SoftmaxCache>,
}

#[derive(Debug)]
struct SoftmaxCache {
    logits: Vec<f64>,
    mask: Vec<bool>,
    tau: f64,
    out: Vec<f64>,
}

impl SoftmaxTemp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, logits: &[f64], tau: f64, mask: &[bool]) -> Result<Vec<f64>> {
        let out = softmax_temp(logits, tau, mask)?;
        self.cache = Some(SoftmaxCache {
            logits: logits.to_vec(),
            mask: mask.to_vec(),
            tau,
            out: out.clone(),
        });
        Ok(out)
    }

    pub fn output(&self) -> Option<&[f64]> {
        self.cache.as_ref().map(|c| c.out.as_slice())
    }

    /// Accumulates into `dlogits` and returns `dL/dtau`.
    pub fn backward(&self, dout: &[f64], dlogits: &mut [f64]) -> Result<f64> {
        let c = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("softmax backward called before forward".into()))?;
        if dlogits.len() != c.out.len() {
            return Err(Error::Dimension(format!(
                "softmax grad buffer of length {} for {} logits",
                dlogits.len(),
                c.out.len()
            )));
        }
        let (dz, dtau) = softmax_temp_backward(&c.out, &c.logits, c.tau, &c.mask, dout)?;
        for (acc, g) in dlogits.iter_mut().zip(dz) {
            *acc += g;
        }
        Ok(dtau)
    }
}
