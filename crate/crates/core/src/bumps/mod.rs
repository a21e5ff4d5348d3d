//! Adversarial bump families: scaled mollifiers on the inflow and outflow
//! faces, their normalization, and the parameter grid.

pub mod mollifier;
pub mod sobolev;

pub use mollifier::Mollifier;
pub use sobolev::{sobolev_norm, Exponent};

use crate::boundary::{full_face, BoundaryFunction, SmoothFunction};
use crate::error::{Error, Result};
use crate::jet::JetSpace;
use crate::quadrature::BoxDomain;
use crate::refdomain::{distance, FlowField};

/// Distance of the normalized norms below one.
pub const NORM_MARGIN: f64 = 1e-3;

/// `amplitude · ψ((z - center)/h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledBump {
    center: Vec<f64>,
    h: f64,
    amplitude: f64,
}

impl ScaledBump {
    pub fn new(center: Vec<f64>, h: f64, amplitude: f64) -> Self {
        assert!(h > 0.0, "bump scale must be positive");
        Self { center, h, amplitude }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitude: self.amplitude * factor,
            ..self.clone()
        }
    }

    fn local(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(z.len());
        for (x, c) in z.iter().zip(&self.center) {
            let u = (x - c) / self.h;
            if u.abs() >= 1.0 {
                return None;
            }
            out.push(u);
        }
        Some(out)
    }
}

impl BoundaryFunction for ScaledBump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self.local(z) {
            Some(u) => self.amplitude * mollifier::psi(&u),
            None => 0.0,
        }
    }

    fn support_box(&self) -> Option<BoxDomain> {
        Some(self.center.iter().map(|c| (c - self.h, c + self.h)).collect())
    }

    fn amplitude(&self) -> f64 {
        self.amplitude.abs()
    }

    fn length_scale(&self) -> f64 {
        self.h
    }
}

impl SmoothFunction for ScaledBump {
    fn derivatives(&self, z: &[f64], space: &JetSpace) -> Vec<f64> {
        let Some(u) = self.local(z) else {
            return vec![0.0; space.len()];
        };
        let mut d = mollifier::psi_derivatives(&u, space);
        for (k, v) in d.iter_mut().enumerate() {
            *v *= self.amplitude * self.h.powi(-(space.degree(k) as i32));
        }
        d
    }
}

/// Sum of bumps; callers keep the supports disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpSum {
    bumps: Vec<ScaledBump>,
}

impl BumpSum {
    pub fn new(bumps: Vec<ScaledBump>) -> Result<Self> {
        let first = bumps
            .first()
            .ok_or_else(|| Error::InvalidInput("bump sum needs at least one bump".into()))?;
        if bumps.iter().any(|b| b.dim() != first.dim()) {
            return Err(Error::InvalidInput("bumps of different dimension".into()));
        }
        Ok(Self { bumps })
    }

    pub fn bumps(&self) -> &[ScaledBump] {
        &self.bumps
    }
}

impl BoundaryFunction for BumpSum {
    fn dim(&self) -> usize {
        self.bumps[0].dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.value(z)).sum()
    }

    fn support_box(&self) -> Option<BoxDomain> {
        let mut acc = self.bumps[0].support_box()?;
        for b in &self.bumps[1..] {
            for (a, s) in acc.iter_mut().zip(b.support_box()?) {
                a.0 = a.0.min(s.0);
                a.1 = a.1.max(s.1);
            }
        }
        Some(acc)
    }

    fn amplitude(&self) -> f64 {
        self.bumps.iter().map(|b| b.amplitude()).fold(0.0, f64::max)
    }

    fn length_scale(&self) -> f64 {
        self.bumps.iter().map(|b| b.h).fold(f64::INFINITY, f64::min)
    }
}

impl SmoothFunction for BumpSum {
    fn derivatives(&self, z: &[f64], space: &JetSpace) -> Vec<f64> {
        let mut acc = vec![0.0; space.len()];
        for b in &self.bumps {
            if b.local(z).is_none() {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(b.derivatives(z, space)) {
                *a += v;
            }
        }
        acc
    }
}

/// Cartesian grid in `½[-1,1]^{d_bar}` with spacing exactly `5h`,
/// `⌊1/(5h)⌋ + 1` points per axis, centered at the origin and shifted by
/// `offset` if given.
pub fn param_grid(h: f64, d_bar: usize, offset: Option<&[f64]>) -> Vec<Vec<f64>> {
    let spacing = 5.0 * h;
    let per_axis = (1.0 / spacing + 1e-9).floor() as usize + 1;
    let half = 0.5 * (per_axis - 1) as f64;
    let axis: Vec<f64> = (0..per_axis).map(|k| (k as f64 - half) * spacing).collect();
    let mut out = vec![Vec::new()];
    for k in 0..d_bar {
        let shift = offset.map_or(0.0, |o| o[k]);
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a + shift);
                    q
                })
            })
            .collect();
    }
    out
}

/// Whether the inflow bumps are normalized as a superposition or one by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `‖Σ_i g_{-,i}‖_{W^{s_-,p}} = 1 - margin`.
    Superposition,
    /// `‖g_{-,i}‖_{W^{s_-,p}} = 1 - margin` for each `i`.
    EachBump,
}

/// Parameters of [`build_family`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilySpec {
    pub h: f64,
    pub s_minus: usize,
    pub s_plus: usize,
    pub p: Exponent,
    /// `d - 1` for fixed flows, `d - 2` for switched flows.
    pub d_bar: usize,
    pub normalization: Normalization,
}

/// One adversarial instance: `g_+` on the outflow face and the inflow bumps
/// `g_{-,i}` matched to the parameters `μ_i`.
#[derive(Clone, Debug)]
pub struct ProblemFamily {
    spec: FamilySpec,
    params: Vec<Vec<f64>>,
    c_minus: f64,
    c_plus: f64,
    g_plus: ScaledBump,
    g_minus: Vec<ScaledBump>,
    plus_norm: f64,
    minus_norm: f64,
}

impl ProblemFamily {
    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// `μ_i` as full flow parameters.
    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn c_minus(&self) -> f64 {
        self.c_minus
    }

    pub fn c_plus(&self) -> f64 {
        self.c_plus
    }

    pub fn g_plus(&self) -> &ScaledBump {
        &self.g_plus
    }

    pub fn g_minus(&self, i: usize) -> &ScaledBump {
        &self.g_minus[i]
    }

    pub fn g_minus_all(&self) -> &[ScaledBump] {
        &self.g_minus
    }

    /// `Σ_i θ_i g_{-,i}`; `None` if every `θ_i` is zero.
    pub fn superposition(&self, theta: &[bool]) -> Option<BumpSum> {
        let bumps: Vec<ScaledBump> = self
            .g_minus
            .iter()
            .zip(theta)
            .filter(|(_, &t)| t)
            .map(|(b, _)| b.clone())
            .collect();
        BumpSum::new(bumps).ok()
    }

    /// Measured `‖g_+‖_{W^{s_+,∞}}` after normalization.
    pub fn plus_norm(&self) -> f64 {
        self.plus_norm
    }

    /// Measured inflow norm after normalization (superposition or single bump,
    /// per the family's [`Normalization`]).
    pub fn minus_norm(&self) -> f64 {
        self.minus_norm
    }

    /// `c_- c_+ h^{s_- + s_+}`.
    pub fn product_scale(&self) -> f64 {
        self.c_minus * self.c_plus * self.spec.h.powi((self.spec.s_minus + self.spec.s_plus) as i32)
    }
}

/// Builds the bump family for `field`.
///
/// `g_+` is centered at the outflow point `(1, 0)`; each `g_{-,i}` is
/// centered at `B_{μ_i}(1, 0)`. Fixed flows use `μ_i` from [`param_grid`];
/// switched-flow families (`d_bar = d - 2`) use `μ_i = (μ̄_i, 5h)` of the
/// underlying fixed flow.
pub fn build_family(field: &FlowField, spec: FamilySpec) -> Result<ProblemFamily> {
    let map = field.reference();
    let m = map.face_dim();
    let h = spec.h;
    if !(h > 0.0 && h <= 0.1 + 1e-12) {
        return Err(Error::InvalidInput(format!("bump scale h must lie in (0, 1/10], got {h}")));
    }
    if spec.s_minus == 0 || spec.s_plus == 0 {
        return Err(Error::InvalidInput("smoothness orders must be positive".into()));
    }
    let params: Vec<Vec<f64>> = if spec.d_bar == m {
        param_grid(h, m, None)
    } else if spec.d_bar + 1 == m {
        param_grid(h, spec.d_bar, None)
            .into_iter()
            .map(|mut p| {
                p.push(5.0 * h);
                p
            })
            .collect()
    } else {
        return Err(Error::InvalidInput(format!(
            "d_bar = {} incompatible with face dimension {m}",
            spec.d_bar
        )));
    };
    // families are built on the underlying fixed flow
    let fixed = FlowField::new(map.clone(), field.s_b())?;

    let mut outflow_center = vec![0.0; m + 1];
    outflow_center[0] = 1.0;
    let mut centers = Vec::with_capacity(params.len());
    for mu in &params {
        let inflow = fixed.backward_map(mu, &outflow_center)?;
        // F_{μ_i} must be a translation near the bump for g_+ ∘ F_{μ_i} to be a bump
        for axis in 0..m {
            for sign in [-1.0, 1.0] {
                let mut probe = inflow.clone();
                probe[1 + axis] += sign * h;
                let mut want = outflow_center.clone();
                want[1 + axis] += sign * h;
                let got = fixed.forward_map(mu, &probe)?;
                if distance(&got, &want) > 1e-12 {
                    return Err(Error::Construction(format!(
                        "forward map at μ = {mu:?} is not a translation near the bump support"
                    )));
                }
            }
        }
        centers.push(inflow[1..].to_vec());
    }

    let face = full_face(m);
    let raw_plus = ScaledBump::new(vec![0.0; m], h, h.powi(spec.s_plus as i32));
    let plus_raw_norm = sobolev_norm(&raw_plus, spec.s_plus, Exponent::Infinity, &face)?;
    let c_plus = (1.0 - NORM_MARGIN) / plus_raw_norm;

    let raw_minus: Vec<ScaledBump> = centers
        .iter()
        .map(|c| ScaledBump::new(c.clone(), h, h.powi(spec.s_minus as i32)))
        .collect();
    let minus_raw_norm = match spec.normalization {
        Normalization::Superposition => {
            let sum = BumpSum::new(raw_minus.clone())?;
            sobolev_norm(&sum, spec.s_minus, spec.p, &face)?
        }
        Normalization::EachBump => sobolev_norm(&raw_minus[0], spec.s_minus, spec.p, &face)?,
    };
    let c_minus = (1.0 - NORM_MARGIN) / minus_raw_norm;

    Ok(ProblemFamily {
        spec,
        g_plus: raw_plus.scaled(c_plus),
        g_minus: raw_minus.iter().map(|b| b.scaled(c_minus)).collect(),
        plus_norm: c_plus * plus_raw_norm,
        minus_norm: c_minus * minus_raw_norm,
        params,
        c_minus,
        c_plus,
    })
}
