//! The standard bump `ψ(z) = exp(1 - 1/(1-|z|²))` on the unit ball.

use crate::error::{Error, Result};
use crate::jet::JetSpace;

// Below this value of 1 - |z|^2 every derivative up to order 8 is under 1e-270.
const CUTOFF: f64 = 1.0 / 700.0;

/// `ψ(z)` without derivatives.
pub fn psi(z: &[f64]) -> f64 {
    let r: f64 = z.iter().map(|x| x * x).sum();
    let u = 1.0 - r;
    if u <= CUTOFF {
        0.0
    } else {
        (1.0 - 1.0 / u).exp()
    }
}

/// All partial derivatives of `ψ` at `z` up to the order of `space`, as
/// `D^α ψ(z)` in the order of `space.indices()`.
pub fn psi_derivatives(z: &[f64], space: &JetSpace) -> Vec<f64> {
    let order = space.order();
    let mut r = space.constant(0.0);
    for (axis, &x) in z.iter().enumerate() {
        let v = space.variable(axis, x);
        let sq = space.mul(&v, &v);
        for (a, b) in r.iter_mut().zip(&sq) {
            *a += b;
        }
    }
    let u: Vec<f64> = r.iter().enumerate().map(|(k, c)| if k == 0 { 1.0 - c } else { -c }).collect();
    if u[0] <= CUTOFF {
        return vec![0.0; space.len()];
    }
    // 1/(u0 + δ) = Σ (-δ)^k / u0^{k+1}
    let recip_taylor: Vec<f64> = (0..=order)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / u[0].powi(k as i32 + 1)
        })
        .collect();
    let recip = space.compose(&recip_taylor, &u);
    let v: Vec<f64> = recip.iter().enumerate().map(|(k, c)| if k == 0 { 1.0 - c } else { -c }).collect();
    let e = v[0].exp();
    let mut fact = 1.0;
    let exp_taylor: Vec<f64> = (0..=order)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            e / fact
        })
        .collect();
    let mut out = space.compose(&exp_taylor, &v);
    space.to_derivatives(&mut out);
    out
}

/// Evaluator for `ψ` on `ℝ^dim` with derivatives up to `max_order`.
#[derive(Clone, Debug)]
pub struct Mollifier {
    space: JetSpace,
}

impl Mollifier {
    pub fn new(dim: usize, max_order: usize) -> Self {
        Self {
            space: JetSpace::new(dim, max_order),
        }
    }

    pub fn dim(&self) -> usize {
        self.space.vars()
    }

    pub fn max_order(&self) -> usize {
        self.space.order()
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    /// `D^α ψ(z)`.
    pub fn eval(&self, z: &[f64], alpha: &[usize]) -> Result<f64> {
        if z.len() != self.dim() || alpha.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "mollifier of dimension {} got point of length {} and multi-index of length {}",
                self.dim(),
                z.len(),
                alpha.len()
            )));
        }
        let order: usize = alpha.iter().sum();
        if order > self.max_order() {
            return Err(Error::InvalidInput(format!(
                "derivative order {order} exceeds configured maximum {}",
                self.max_order()
            )));
        }
        if order == 0 {
            return Ok(psi(z));
        }
        let k = self.space.index_of(alpha).expect("admissible multi-index");
        Ok(psi_derivatives(z, &self.space)[k])
    }
}
