//! Switch `ϑ(μ̂) = Σ_k ϑ_k δ φ(h^{-1/s_b}(μ̂ - μ̂_k))` with `δ = 5h`.

use crate::bumps::mollifier::{psi, psi_derivatives};
use crate::error::{Error, Result};
use crate::jet::JetSpace;

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchFunction {
    dim: usize,
    h: f64,
    s_b: usize,
    centers: Vec<Vec<f64>>,
    active: Vec<bool>,
}

impl SwitchFunction {
    /// Centers on a grid in `½[-1,1]^D` with spacing `5 h^{1/s_b}`.
    pub fn new(dim: usize, h: f64, s_b: usize, active: Vec<bool>) -> Result<Self> {
        if dim == 0 || s_b == 0 {
            return Err(Error::InvalidInput("switch needs D >= 1 and s_b >= 1".into()));
        }
        if !(h > 0.0 && h <= 0.1 + 1e-12) {
            return Err(Error::InvalidInput(format!("switch scale h must lie in (0, 1/10], got {h}")));
        }
        let centers = Self::grid(dim, h, s_b);
        if active.len() != centers.len() {
            return Err(Error::InvalidInput(format!(
                "switch has {} centers but {} activity bits",
                centers.len(),
                active.len()
            )));
        }
        Ok(Self {
            dim,
            h,
            s_b,
            centers,
            active,
        })
    }

    /// Number of centers `K` for the given configuration.
    pub fn center_count(dim: usize, h: f64, s_b: usize) -> usize {
        Self::grid(dim, h, s_b).len()
    }

    fn grid(dim: usize, h: f64, s_b: usize) -> Vec<Vec<f64>> {
        let spacing = 5.0 * h.powf(1.0 / s_b as f64);
        let per_axis = (1.0 / spacing + 1e-9).floor() as usize + 1;
        let offset = 0.5 * spacing * (per_axis - 1) as f64;
        let axis: Vec<f64> = (0..per_axis).map(|k| k as f64 * spacing - offset).collect();
        let mut out = vec![Vec::new()];
        for _ in 0..dim {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s_b(&self) -> usize {
        self.s_b
    }

    pub fn delta(&self) -> f64 {
        5.0 * self.h
    }

    /// Support radius `h^{1/s_b}` of each bump.
    pub fn radius(&self) -> f64 {
        self.h.powf(1.0 / self.s_b as f64)
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    fn check(&self, mu_hat: &[f64]) -> Result<()> {
        if mu_hat.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "μ̂ has length {}, expected {}",
                mu_hat.len(),
                self.dim
            )));
        }
        if mu_hat.iter().any(|x| !x.is_finite() || x.abs() > 1.0 + 1e-12) {
            return Err(Error::Domain(format!("μ̂ = {mu_hat:?} outside [-1,1]^{}", self.dim)));
        }
        Ok(())
    }

    /// `ϑ(μ̂)`.
    pub fn value(&self, mu_hat: &[f64]) -> Result<f64> {
        self.check(mu_hat)?;
        let r = self.radius();
        let mut acc = 0.0;
        for (c, &on) in self.centers.iter().zip(&self.active) {
            if !on {
                continue;
            }
            let z: Vec<f64> = mu_hat.iter().zip(c).map(|(m, c)| (m - c) / r).collect();
            acc += self.delta() * psi(&z);
        }
        Ok(acc)
    }

    /// All `D^α ϑ(μ̂)` for `|α| ≤ space.order()`.
    pub fn derivatives(&self, mu_hat: &[f64], space: &JetSpace) -> Result<Vec<f64>> {
        self.check(mu_hat)?;
        let r = self.radius();
        let mut acc = vec![0.0; space.len()];
        for (c, &on) in self.centers.iter().zip(&self.active) {
            if !on {
                continue;
            }
            let z: Vec<f64> = mu_hat.iter().zip(c).map(|(m, c)| (m - c) / r).collect();
            let d = psi_derivatives(&z, space);
            for (k, v) in d.iter().enumerate() {
                acc[k] += self.delta() * v * r.powi(-(space.degree(k) as i32));
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_values() {
        let s = SwitchFunction::new(1, 0.1, 1, vec![true, false, true]).unwrap();
        assert_eq!(s.centers().len(), 3);
        assert_eq!(s.value(&[-0.5]).unwrap(), 0.5);
        assert_eq!(s.value(&[0.0]).unwrap(), 0.0);
        assert!((s.value(&[0.5]).unwrap() - 5.0 * 0.1).abs() < 1e-15);
        assert_eq!(s.value(&[0.25]).unwrap(), 0.0);
        assert_eq!(SwitchFunction::center_count(1, 0.05, 1), 5);
        assert_eq!(SwitchFunction::center_count(2, 0.1, 1), 9);
        assert!(SwitchFunction::new(1, 0.1, 1, vec![true]).is_err());
        assert!(s.value(&[1.2]).is_err());
    }

    #[test]
    fn bump_supports_are_disjoint() {
        for (h, sb) in [(0.1, 1), (0.05, 1), (0.01, 2), (0.001, 3)] {
            let k = SwitchFunction::center_count(1, h, sb);
            let s = SwitchFunction::new(1, h, sb, vec![true; k]).unwrap();
            let c = s.centers();
            for i in 0..c.len() {
                for j in i + 1..c.len() {
                    assert!((c[i][0] - c[j][0]).abs() >= 2.0 * s.radius());
                }
            }
        }
    }

    #[test]
    fn derivatives_up_to_s_b_stay_bounded_in_h() {
        for sb in [1usize, 2] {
            let space = JetSpace::new(1, sb);
            let mut maxima = Vec::new();
            for h in [0.1, 0.05, 0.025, 0.0125] {
                let k = SwitchFunction::center_count(1, h, sb);
                let s = SwitchFunction::new(1, h, sb, vec![true; k]).unwrap();
                let mut top: f64 = 0.0;
                for j in 0..=4000 {
                    let x = -1.0 + 2.0 * j as f64 / 4000.0;
                    let d = s.derivatives(&[x], &space).unwrap();
                    top = top.max(d[sb].abs());
                }
                maxima.push(top);
            }
            let spread = maxima.iter().cloned().fold(0.0, f64::max) / maxima.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 2.0, "s_b={sb} maxima {maxima:?}");
        }
    }

    #[test]
    fn finite_difference_check_of_first_derivative() {
        let s = SwitchFunction::new(1, 0.1, 1, vec![true, true, true]).unwrap();
        let space = JetSpace::new(1, 1);
        let x = 0.07;
        let e = 1e-6;
        let fd = (s.value(&[x + e]).unwrap() - s.value(&[x - e]).unwrap()) / (2.0 * e);
        let d = s.derivatives(&[x], &space).unwrap();
        assert!((fd - d[1]).abs() < 1e-7);
    }
}
