//! Singular value decay of discretised transport snapshots.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::widths::{rate_fit, RateFit};

pub const MIN_MU_POINTS: usize = 512;
pub const MIN_X_POINTS: usize = 2048;

/// `n` midpoints of `[a, b]` and the common cell width.
fn midpoints(a: f64, b: f64, n: usize) -> (Vec<f64>, f64) {
    let w = (b - a) / n as f64;
    ((0..n).map(|k| a + (k as f64 + 0.5) * w).collect(), w)
}

/// Rows are parameters, columns are space points; entries are scaled by
/// `√(w_μ w_x)` so singular values approximate those of the continuous
/// snapshot operator.
pub fn weighted_snapshot_matrix(
    f: impl Fn(f64, f64) -> f64,
    mu_range: (f64, f64),
    n_mu: usize,
    x_range: (f64, f64),
    n_x: usize,
) -> DMatrix<f64> {
    let (mus, wm) = midpoints(mu_range.0, mu_range.1, n_mu);
    let (xs, wx) = midpoints(x_range.0, x_range.1, n_x);
    let scale = (wm * wx).sqrt();
    DMatrix::from_fn(n_mu, n_x, |i, j| scale * f(xs[j], mus[i]))
}

/// Snapshots `x ↦ 1_{x ≥ μ}` with `x, μ ∈ [-1, 1]`.
pub fn heaviside_snapshots(n_mu: usize, n_x: usize) -> DMatrix<f64> {
    weighted_snapshot_matrix(|x, mu| if x >= mu { 1.0 } else { 0.0 }, (-1.0, 1.0), n_mu, (-1.0, 1.0), n_x)
}

/// Singular values in decreasing order, from the eigenvalues of the smaller
/// Gram matrix.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let gram = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let mut s: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[derive(Clone, Debug)]
pub struct SvdDecay {
    pub singular_values: Vec<f64>,
    /// `E_n = (Σ_{k>n} σ_k²)^{1/2}`, the best rank-`n` error.
    pub tail: Vec<f64>,
}

impl SvdDecay {
    pub fn from_singular_values(singular_values: Vec<f64>) -> Self {
        let mut tail = vec![0.0; singular_values.len() + 1];
        let mut acc = 0.0;
        for k in (0..singular_values.len()).rev() {
            acc += singular_values[k] * singular_values[k];
            tail[k] = acc.sqrt();
        }
        Self { singular_values, tail }
    }

    /// Power-law fit of `E_n` for `n ∈ [lo, hi]`.
    pub fn fit(&self, lo: usize, hi: usize) -> Result<RateFit> {
        if hi >= self.tail.len() || lo == 0 || lo >= hi {
            return Err(Error::InvalidInput(format!("bad fit range [{lo}, {hi}]")));
        }
        let samples: Vec<(f64, f64)> = (lo..=hi).map(|n| (n as f64, self.tail[n])).collect();
        rate_fit(&samples, Some(0.5))
    }
}

/// Heaviside snapshot decay on a grid at least `512 × 2048`.
pub fn snapshot_svd_decay(n_mu: usize, n_x: usize) -> Result<SvdDecay> {
    if n_mu < MIN_MU_POINTS || n_x < MIN_X_POINTS {
        return Err(Error::InvalidInput(format!(
            "snapshot grid {n_mu} x {n_x} is coarser than {MIN_MU_POINTS} x {MIN_X_POINTS}"
        )));
    }
    Ok(SvdDecay::from_singular_values(singular_values(&heaviside_snapshots(n_mu, n_x))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lower_triangular_ones_matches_closed_form() {
        let n = 40;
        let m = DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 });
        let s = singular_values(&m);
        for k in 1..=n {
            let want = 1.0 / (2.0 * ((2 * k - 1) as f64 * PI / (4 * n + 2) as f64).sin());
            assert!((s[k - 1] - want).abs() < 1e-10 * want, "k = {k}");
        }
    }

    #[test]
    fn constant_snapshots_have_rank_one() {
        let m = weighted_snapshot_matrix(|_, _| 3.0, (0.0, 1.0), 16, (0.0, 2.0), 32);
        let s = singular_values(&m);
        // ‖3‖ over [0,1]×[0,2]
        assert!((s[0] - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(s[1] < 1e-6);
    }

    #[test]
    fn tail_is_frobenius_norm_at_zero() {
        let m = heaviside_snapshots(32, 64);
        let d = SvdDecay::from_singular_values(singular_values(&m));
        assert!((d.tail[0] - m.norm()).abs() < 1e-10);
        assert!(d.tail.windows(2).all(|w| w[1] <= w[0]));
        assert!(snapshot_svd_decay(32, 64).is_err());
    }
}
