//! Reference-domain geometry on the box `Ω = [0,1] × [-1,1]^{d-1}`.
//!
//! A [`ReferenceMap`] `Ξ(t, w)` sends the box onto `Ω` with `Ξ(0,·)` on the
//! inflow face `x_0 = 0` and `Ξ(1,·)` on the outflow face `x_0 = 1`. Its
//! parametric shear `Ξ_μ(t, w) = Ξ(t, w + (1-t)μ)` generates the flow
//! fields, characteristics and inflow/outflow maps in [`flow`].

mod flow;
mod switch;

pub use flow::{FlowField, TRACE_FACE_TOLERANCE};
pub use switch::SwitchFunction;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for membership tests against closed boxes.
pub const BOX_SLACK: f64 = 1e-12;

const NEWTON_TOLERANCE: f64 = 1e-12;
const NEWTON_MAX_ITERATIONS: usize = 50;
const MAX_AMPLITUDE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    /// `Ξ(t,w) = (t, w + a·t(1-t)·s(w))` with amplitude `a`.
    Curved { amplitude: f64 },
}

/// The map `Ξ` from `[0,1] × [-1,1]^{d-1}` onto `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMap {
    dim: usize,
    kind: MapKind,
}

impl ReferenceMap {
    pub fn new(dim: usize, kind: MapKind) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("spatial dimension must be >= 2, got {dim}")));
        }
        if let MapKind::Curved { amplitude } = kind {
            if !(0.0..=MAX_AMPLITUDE).contains(&amplitude) {
                return Err(Error::InvalidInput(format!(
                    "curvature amplitude must lie in [0, {MAX_AMPLITUDE}], got {amplitude}"
                )));
            }
        }
        Ok(Self { dim, kind })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(dim, MapKind::Identity)
    }

    pub fn curved(dim: usize, amplitude: f64) -> Result<Self> {
        Self::new(dim, MapKind::Curved { amplitude })
    }

    /// Spatial dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Face dimension `d - 1`.
    pub fn face_dim(&self) -> usize {
        self.dim - 1
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        match self.kind {
            MapKind::Identity => 0.0,
            MapKind::Curved { amplitude } => amplitude,
        }
    }

    fn shape(&self, w: &[f64]) -> Vec<f64> {
        let m = w.len();
        if m == 1 {
            return vec![(std::f64::consts::PI * w[0]).sin()];
        }
        (0..m)
            .map(|j| {
                let pi = std::f64::consts::PI;
                (pi * w[j]).sin() * (1.0 + 0.5 * (pi * w[(j + 1) % m]).cos())
            })
            .collect()
    }

    fn shape_jacobian(&self, w: &[f64]) -> DMatrix<f64> {
        let m = w.len();
        let pi = std::f64::consts::PI;
        let mut jac = DMatrix::zeros(m, m);
        if m == 1 {
            jac[(0, 0)] = pi * (pi * w[0]).cos();
            return jac;
        }
        for j in 0..m {
            let next = (j + 1) % m;
            jac[(j, j)] = pi * (pi * w[j]).cos() * (1.0 + 0.5 * (pi * w[next]).cos());
            jac[(j, next)] += (pi * w[j]).sin() * (-0.5 * pi * (pi * w[next]).sin());
        }
        jac
    }

    fn check_reference(&self, t: f64, w: &[f64]) -> Result<()> {
        if w.len() != self.face_dim() {
            return Err(Error::InvalidInput(format!(
                "reference point has {} cross coordinates, expected {}",
                w.len(),
                self.face_dim()
            )));
        }
        if !(-BOX_SLACK..=1.0 + BOX_SLACK).contains(&t) || w.iter().any(|x| x.abs() > 1.0 + BOX_SLACK) {
            return Err(Error::Domain(format!("reference point ({t}, {w:?}) outside [0,1] x [-1,1]^m")));
        }
        Ok(())
    }

    /// `Ξ(t, w)`.
    pub fn eval(&self, t: f64, w: &[f64]) -> Result<Vec<f64>> {
        self.check_reference(t, w)?;
        Ok(self.eval_unchecked(t, w))
    }

    pub(crate) fn eval_unchecked(&self, t: f64, w: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        out.push(t);
        match self.kind {
            MapKind::Identity => out.extend_from_slice(w),
            MapKind::Curved { amplitude } => {
                let c = amplitude * t * (1.0 - t);
                out.extend(w.iter().zip(self.shape(w)).map(|(x, s)| x + c * s));
            }
        }
        out
    }

    /// `∂_t Ξ(t, w)`.
    pub fn dt(&self, t: f64, w: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        out.push(1.0);
        match self.kind {
            MapKind::Identity => out.extend(std::iter::repeat_n(0.0, w.len())),
            MapKind::Curved { amplitude } => {
                let c = amplitude * (1.0 - 2.0 * t);
                out.extend(self.shape(w).into_iter().map(|s| c * s));
            }
        }
        out
    }

    /// Jacobian of the cross components of `Ξ(t, ·)` with respect to `w`.
    pub fn dw(&self, t: f64, w: &[f64]) -> DMatrix<f64> {
        let m = w.len();
        match self.kind {
            MapKind::Identity => DMatrix::identity(m, m),
            MapKind::Curved { amplitude } => {
                DMatrix::identity(m, m) + self.shape_jacobian(w) * (amplitude * t * (1.0 - t))
            }
        }
    }

    /// `Ξ^{-1}(x)` as `(t, w)`, by damped Newton iteration on the cross components.
    pub fn inverse(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim
            )));
        }
        if !in_omega(x) {
            return Err(Error::Domain(format!("point {x:?} outside Ω")));
        }
        let t = x[0].clamp(0.0, 1.0);
        let target = &x[1..];
        let c = match self.kind {
            MapKind::Identity => return Ok((t, target.to_vec())),
            MapKind::Curved { amplitude } => amplitude * t * (1.0 - t),
        };
        let residual = |w: &[f64]| -> DVector<f64> {
            let s = self.shape(w);
            DVector::from_iterator(w.len(), (0..w.len()).map(|j| w[j] + c * s[j] - target[j]))
        };
        let mut w = target.to_vec();
        let mut r = residual(&w);
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let norm = r.amax();
            if norm <= NEWTON_TOLERANCE {
                return Ok((t, w));
            }
            let jac = self.dw(t, &w);
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::LinearSystem("singular Jacobian in map inversion".into()))?;
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = w
                    .iter()
                    .zip(step.iter())
                    .map(|(a, d)| (a - lambda * d).clamp(-1.0, 1.0))
                    .collect();
                let rt = residual(&trial);
                if rt.amax() < norm || lambda < 1e-4 {
                    w = trial;
                    r = rt;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if r.amax() <= 10.0 * NEWTON_TOLERANCE {
            return Ok((t, w));
        }
        Err(Error::Construction(format!(
            "map inversion did not converge at {x:?} (residual {:e})",
            r.amax()
        )))
    }

    /// `Ξ_μ(t, w) = Ξ(t, w + (1-t)μ)` for `w, μ ∈ ½[-1,1]^{d-1}`.
    pub fn xi_mu(&self, mu: &[f64], t: f64, w: &[f64]) -> Result<Vec<f64>> {
        check_half_box("w", w, self.face_dim())?;
        check_half_box("μ", mu, self.face_dim())?;
        if !(-BOX_SLACK..=1.0 + BOX_SLACK).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0,1]")));
        }
        let v: Vec<f64> = w.iter().zip(mu).map(|(a, m)| a + (1.0 - t) * m).collect();
        Ok(self.eval_unchecked(t, &v))
    }

    /// `(t, w)` with `Ξ_μ(t, w) = x`; `w` may lie outside the half box.
    pub fn xi_mu_inverse(&self, mu: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (t, v) = self.inverse(x)?;
        let w = v.iter().zip(mu).map(|(a, m)| a - (1.0 - t) * m).collect();
        Ok((t, w))
    }
}

/// Whether `x` lies in `Ω` up to [`BOX_SLACK`].
pub fn in_omega(x: &[f64]) -> bool {
    !x.is_empty()
        && (-BOX_SLACK..=1.0 + BOX_SLACK).contains(&x[0])
        && x[1..].iter().all(|v| v.abs() <= 1.0 + BOX_SLACK)
}

/// Rejects vectors of the wrong length or outside `½[-1,1]^len`.
pub fn check_half_box(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::InvalidInput(format!(
            "{name} has length {}, expected {len}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite() || x.abs() > 0.5 + BOX_SLACK) {
        return Err(Error::Domain(format!("{name} = {v:?} outside ½[-1,1]^{len}")));
    }
    Ok(())
}

/// Euclidean distance.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xi_mu_examples() {
        let map = ReferenceMap::identity(2).unwrap();
        assert_eq!(map.xi_mu(&[0.2], 0.5, &[0.0]).unwrap(), vec![0.5, 0.1]);
        let p = map.xi_mu(&[0.3], 0.0, &[0.1]).unwrap();
        assert!((p[0] - 0.0).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
        let curved = ReferenceMap::curved(3, 0.15).unwrap();
        let a = curved.xi_mu(&[0.4, -0.2], 1.0, &[0.1, 0.3]).unwrap();
        let b = curved.xi_mu(&[-0.3, 0.5], 1.0, &[0.1, 0.3]).unwrap();
        assert_eq!(a, b);
        assert!(map.xi_mu(&[0.6], 0.5, &[0.0]).is_err());
        assert!(map.xi_mu(&[0.1], 0.5, &[-0.51]).is_err());
    }

    #[test]
    fn faces_are_preserved() {
        for map in [ReferenceMap::curved(2, 0.2).unwrap(), ReferenceMap::curved(3, 0.2).unwrap()] {
            let w = vec![0.37; map.face_dim()];
            assert_eq!(map.eval(0.0, &w).unwrap()[0], 0.0);
            assert_eq!(map.eval(1.0, &w).unwrap()[0], 1.0);
            // the shape field vanishes on the lateral boundary
            let edge = vec![1.0; map.face_dim()];
            let p = map.eval(0.5, &edge).unwrap();
            assert!(p[1..].iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(ReferenceMap::identity(1).is_err());
        assert!(ReferenceMap::curved(2, 0.3).is_err());
        assert!(ReferenceMap::curved(2, -0.1).is_err());
    }

    #[test]
    fn one_to_one_by_sampling() {
        for map in [ReferenceMap::curved(2, 0.2).unwrap(), ReferenceMap::curved(3, 0.2).unwrap()] {
            let m = map.face_dim();
            let pts: Vec<(f64, Vec<f64>)> = (0..7)
                .flat_map(|i| {
                    (0..7).map(move |j| {
                        let t = i as f64 / 6.0;
                        let w = (0..m).map(|k| -1.0 + 2.0 * ((j + 2 * k) % 7) as f64 / 6.0).collect();
                        (t, w)
                    })
                })
                .collect();
            let mut worst = f64::INFINITY;
            for (a, pa) in pts.iter().enumerate() {
                for pb in &pts[a + 1..] {
                    let din = distance(&[&[pa.0][..], &pa.1].concat(), &[&[pb.0][..], &pb.1].concat());
                    if din == 0.0 {
                        continue;
                    }
                    let dout = distance(&map.eval(pa.0, &pa.1).unwrap(), &map.eval(pb.0, &pb.1).unwrap());
                    worst = worst.min(dout / din);
                }
            }
            assert!(worst > 0.3, "distortion {worst}");
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trip(t in 0.0f64..=1.0, w0 in -1.0f64..=1.0, w1 in -1.0f64..=1.0, a in 0.0f64..=0.2) {
            let map2 = ReferenceMap::curved(2, a).unwrap();
            let (tt, ww) = map2.inverse(&map2.eval(t, &[w0]).unwrap()).unwrap();
            prop_assert!((tt - t).abs() < 1e-10 && (ww[0] - w0).abs() < 1e-10);
            let map3 = ReferenceMap::curved(3, a).unwrap();
            let (tt, ww) = map3.inverse(&map3.eval(t, &[w0, w1]).unwrap()).unwrap();
            prop_assert!((tt - t).abs() < 1e-10);
            prop_assert!((ww[0] - w0).abs() < 1e-10 && (ww[1] - w1).abs() < 1e-10);
        }

        #[test]
        fn parametric_inverse_round_trip(t in 0.0f64..=1.0, w in -0.5f64..=0.5, mu in -0.5f64..=0.5) {
            let map = ReferenceMap::curved(2, 0.1).unwrap();
            let x = map.xi_mu(&[mu], t, &[w]).unwrap();
            let (tt, ww) = map.xi_mu_inverse(&[mu], &x).unwrap();
            prop_assert!((tt - t).abs() < 1e-10 && (ww[0] - w).abs() < 1e-10);
        }
    }
}
