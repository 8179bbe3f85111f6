//! Central finite differences for checking analytic gradients.
//!
//! Relative error of one entry is `|a - n| / max(|a|, |n|, SCALE_FLOOR)`.
//! The floor keeps gradients that are exactly zero (where the difference
//! quotient only sees rounding noise of order `eps / h`) from reporting a
//! relative error of 1.

use rand::Rng;

use super::rng::stream_rng;
use super::Matrix;

/// Smallest denominator of the relative error.
pub const SCALE_FLOOR: f64 = 1e-4;

/// Default step for central differences at 64-bit precision.
pub const DEFAULT_STEP: f64 = 1e-5;

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate `i`.
pub fn central_difference<F>(x: &[f64], h: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe);
        probe[i] = x[i] - h;
        let minus = f(&probe);
        probe[i] = x[i];
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradComparison {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    /// Index of the entry with the largest relative error.
    pub worst: usize,
    pub count: usize,
}

impl GradComparison {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.max_rel_err < rel_tol
    }

    /// Combines two comparisons; `worst` is kept relative to whichever side
    /// holds the larger error.
    pub fn merge(self, other: GradComparison) -> GradComparison {
        let (max_rel_err, worst) = if other.max_rel_err > self.max_rel_err {
            (other.max_rel_err, other.worst)
        } else {
            (self.max_rel_err, self.worst)
        };
        GradComparison {
            max_rel_err,
            max_abs_err: self.max_abs_err.max(other.max_abs_err),
            worst,
            count: self.count + other.count,
        }
    }
}

impl Default for GradComparison {
    fn default() -> Self {
        Self {
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            worst: 0,
            count: 0,
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(SCALE_FLOOR)
}

pub fn compare_gradients(analytic: &[f64], numeric: &[f64]) -> GradComparison {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut cmp = GradComparison {
        count: analytic.len(),
        ..Default::default()
    };
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let rel = relative_error(a, n);
        cmp.max_abs_err = cmp.max_abs_err.max((a - n).abs());
        if rel > cmp.max_rel_err {
            cmp.max_rel_err = rel;
            cmp.worst = i;
        }
    }
    cmp
}

/// Uniform `[-1, 1)` entries from a seeded stream.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, "random_matrix", 0);
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches")
}
