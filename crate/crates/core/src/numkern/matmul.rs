use crate::error::{Error, Result};

use super::Matrix;

/// `a × b`, summing left to right over the inner dimension.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::Dimension(format!(
            "matmul: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = Matrix::zeros(n, m);
    let bs = b.as_slice();
    for i in 0..n {
        let arow = a.row(i);
        let orow = out.row_mut(i);
        for (j, o) in orow.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (p, &av) in arow.iter().enumerate().take(k) {
                acc += av * bs[p * m + j];
            }
            *o = acc;
        }
    }
    Ok(out)
}

/// `a × bᵀ` without materialising the transpose.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "matmul_nt: {}x{} times ({}x{})ᵀ",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let arow = a.row(i);
        for j in 0..b.rows() {
            let brow = b.row(j);
            let mut acc = 0.0;
            for (x, y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Cached matrix product. `backward` accumulates `dout·bᵀ` into `da` and
/// `aᵀ·dout` into `db`.
#[derive(Debug, Default)]
pub struct MatMul {
    cache: Option<(Matrix, Matrix)>,
}

impl MatMul {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, a: &Matrix, b: &Matrix) -> Result<Matrix> {
        let out = matmul(a, b)?;
        self.cache = Some((a.clone(), b.clone()));
        Ok(out)
    }

    pub fn backward(&self, dout: &Matrix, da: &mut Matrix, db: &mut Matrix) -> Result<()> {
        let (a, b) = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("matmul backward called before forward".into()))?;
        dout.ensure_shape(a.rows(), b.cols(), "matmul upstream gradient")?;
        da.ensure_shape(a.rows(), a.cols(), "matmul grad(a)")?;
        db.ensure_shape(b.rows(), b.cols(), "matmul grad(b)")?;
        da.add_assign(&matmul_nt(dout, b)?)?;
        db.add_assign(&matmul(&a.transpose(), dout)?)?;
        Ok(())
    }
}
