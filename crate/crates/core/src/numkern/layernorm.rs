use crate::error::{Error, Result};

use super::Matrix;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Population mean and `1/sqrt(var + eps)` of one row.
fn moments(x: &[f64], eps: f64) -> Result<(f64, f64)> {
    let d = x.len() as f64;
    let mean = x.iter().sum::<f64>() / d;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
    let denom = (var + eps).sqrt();
    if denom == 0.0 {
        return Err(Error::Domain(
            "layernorm of a constant row with eps = 0".into(),
        ));
    }
    Ok((mean, 1.0 / denom))
}

fn check_params(d: usize, gain: &[f64], bias: &[f64], eps: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidInput("layernorm over an empty row".into()));
    }
    if gain.len() != d || bias.len() != d {
        return Err(Error::Dimension(format!(
            "layernorm: row of length {d}, gain {}, bias {}",
            gain.len(),
            bias.len()
        )));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::Domain(format!("layernorm eps must be >= 0, got {eps}")));
    }
    Ok(())
}

/// `gain ⊙ (x - mean) / sqrt(var + eps) + bias` with population variance.
pub fn layernorm(x: &[f64], gain: &[f64], bias: &[f64], eps: f64) -> Result<Vec<f64>> {
    check_params(x.len(), gain, bias, eps)?;
    let (mean, rstd) = moments(x, eps)?;
    Ok(x.iter()
        .zip(gain.iter().zip(bias))
        .map(|(v, (g, b))| g * ((v - mean) * rstd) + b)
        .collect())
}

/// Row-wise layer normalisation over a matrix, caching what the backward
/// pass needs.
#[derive(Debug)]
pub struct LayerNorm {
    eps: f64,
    cache: Option<LnCache>,
}

#[derive(Debug)]
struct LnCache {
    xhat: Matrix,
    rstd: Vec<f64>,
    gain: Vec<f64>,
}

impl Default for LayerNorm {
    fn default() -> Self {
        Self::new(DEFAULT_EPS)
    }
}

impl LayerNorm {
    pub fn new(eps: f64) -> Self {
        Self { eps, cache: None }
    }

    pub fn forward(&mut self, x: &Matrix, gain: &[f64], bias: &[f64]) -> Result<Matrix> {
        check_params(x.cols(), gain, bias, self.eps)?;
        let mut xhat = Matrix::zeros(x.rows(), x.cols());
        let mut out = Matrix::zeros(x.rows(), x.cols());
        let mut rstd = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = x.row(r);
            let (mean, rs) = moments(row, self.eps)?;
            rstd.push(rs);
            let hrow = xhat.row_mut(r);
            for (h, v) in hrow.iter_mut().zip(row) {
                *h = (v - mean) * rs;
            }
            let hrow = xhat.row(r);
            for (i, o) in out.row_mut(r).iter_mut().enumerate() {
                *o = gain[i] * hrow[i] + bias[i];
            }
        }
        self.cache = Some(LnCache {
            xhat,
            rstd,
            gain: gain.to_vec(),
        });
        Ok(out)
    }

    /// Accumulates parameter gradients into `dgain`/`dbias` and, when given,
    /// the input gradient into `dx`.
    pub fn backward(
        &self,
        dout: &Matrix,
        dx: Option<&mut Matrix>,
        dgain: &mut [f64],
        dbias: &mut [f64],
    ) -> Result<()> {
        let c = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("layernorm backward called before forward".into()))?;
        let (rows, d) = c.xhat.shape();
        dout.ensure_shape(rows, d, "layernorm upstream gradient")?;
        if dgain.len() != d || dbias.len() != d {
            return Err(Error::Dimension(format!(
                "layernorm parameter grads of length {}/{} for width {d}",
                dgain.len(),
                dbias.len()
            )));
        }
        let mut dx = dx;
        if let Some(dx) = dx.as_deref() {
            dx.ensure_shape(rows, d, "layernorm grad(x)")?;
        }
        let inv_d = 1.0 / d as f64;
        for r in 0..rows {
            let xh = c.xhat.row(r);
            let g = dout.row(r);
            let mut mean_dn = 0.0;
            let mut mean_dn_xh = 0.0;
            for i in 0..d {
                let dn = c.gain[i] * g[i];
                mean_dn += dn;
                mean_dn_xh += dn * xh[i];
                dgain[i] += g[i] * xh[i];
                dbias[i] += g[i];
            }
            mean_dn *= inv_d;
            mean_dn_xh *= inv_d;
            if let Some(dx) = dx.as_deref_mut() {
                let rs = c.rstd[r];
                for (i, out) in dx.row_mut(r).iter_mut().enumerate() {
                    let dn = c.gain[i] * g[i];
                    *out += rs * (dn - mean_dn - xh[i] * mean_dn_xh);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::gradcheck::{central_difference, compare_gradients, random_matrix};
    use proptest::prelude::*;

    #[test]
    fn two_element_example() {
        let y = layernorm(&[1.0, 3.0], &[1.0, 1.0], &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(y, vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_row_returns_bias() {
        let bias = [0.5, -2.0, 3.0];
        let y = layernorm(&[4.0; 3], &[2.0, 3.0, -1.0], &bias, 1e-5).unwrap();
        assert_eq!(y, bias.to_vec());
    }

    #[test]
    fn zero_gain_returns_bias() {
        let bias = [0.25, -1.0];
        let y = layernorm(&[7.0, -3.0], &[0.0, 0.0], &bias, 1e-5).unwrap();
        assert_eq!(y, bias.to_vec());
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            layernorm(&[1.0, 2.0], &[1.0], &[0.0, 0.0], 1e-5),
            Err(Error::Dimension(_))
        ));
        assert!(layernorm(&[], &[], &[], 1e-5).is_err());
        let ln = LayerNorm::default();
        let mut g = [0.0];
        let mut b = [0.0];
        assert!(matches!(
            ln.backward(&Matrix::zeros(1, 1), None, &mut g, &mut b),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let x = random_matrix(5, 7, 21);
        let gain = random_matrix(1, 7, 22).into_vec();
        let bias = random_matrix(1, 7, 23).into_vec();
        let w = random_matrix(5, 7, 24);
        let loss = |x: &[f64], g: &[f64], b: &[f64]| -> f64 {
            let m = Matrix::from_vec(5, 7, x.to_vec()).unwrap();
            let y = LayerNorm::default().forward(&m, g, b).unwrap();
            y.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum()
        };
        let mut ln = LayerNorm::default();
        ln.forward(&x, &gain, &bias).unwrap();
        let mut dx = Matrix::zeros(5, 7);
        let mut dg = vec![0.0; 7];
        let mut db = vec![0.0; 7];
        ln.backward(&w, Some(&mut dx), &mut dg, &mut db).unwrap();

        let nx = central_difference(x.as_slice(), 1e-5, |v| loss(v, &gain, &bias));
        let ng = central_difference(&gain, 1e-5, |v| loss(x.as_slice(), v, &bias));
        let nb = central_difference(&bias, 1e-5, |v| loss(x.as_slice(), &gain, v));
        assert!(compare_gradients(dx.as_slice(), &nx).passes(1e-6));
        assert!(compare_gradients(&dg, &ng).passes(1e-6));
        assert!(compare_gradients(&db, &nb).passes(1e-6));
    }

    proptest! {
        #[test]
        fn standardises_non_constant_rows(x in proptest::collection::vec(-100.0f64..100.0, 2..64)) {
            let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - x.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            let d = x.len();
            let y = layernorm(&x, &vec![1.0; d], &vec![0.0; d], 0.0).unwrap();
            let mean = y.iter().sum::<f64>() / d as f64;
            let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            prop_assert!(mean.abs() < 1e-10);
            prop_assert!((var - 1.0).abs() < 1e-10);
        }
    }
}
