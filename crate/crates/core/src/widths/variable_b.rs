//! Switched-flow families `q_{θ,ϑ}(μ̄, μ̂)` for the variable-flow lower bound.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bumps::{build_family, param_grid, Exponent, FamilySpec, Normalization, ProblemFamily};
use crate::error::{Error, Result};
use crate::refdomain::{FlowField, ReferenceMap, SwitchFunction};
use crate::transport::{qoi_curve, CurveMeta, QoICurve, TransportProblem};

use super::ZERO_THRESHOLD;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariableBSpec {
    pub h: f64,
    /// Dimension `D` of `μ̂`.
    pub dim_hat: usize,
    pub s_b: usize,
    pub s_minus: usize,
    pub s_plus: usize,
    pub p: Exponent,
}

/// Curves of every `(θ, ϑ)` pair on the grid `{μ̄_i} × M̂`, where `M̂` holds
/// the switch centers and the midpoints between neighbouring centers.
#[derive(Clone, Debug)]
pub struct VariableBFamily {
    pub family: ProblemFamily,
    pub switch_centers: Vec<Vec<f64>>,
    pub thetas: Vec<Vec<bool>>,
    pub varthetas: Vec<Vec<bool>>,
    /// `(θ index, ϑ index)` of each curve.
    pub labels: Vec<(usize, usize)>,
    pub curves: Vec<QoICurve>,
    pub grid: Vec<Vec<f64>>,
    /// Grid index of `(μ̄_i, μ̂_k)`, row-major in `(i, k)`.
    pub natural: Vec<usize>,
}

/// Result of [`VariableBFamily::product_structure`].
#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    /// Smallest value where `θ_i = ϑ_k = 1`.
    pub min_on: f64,
    /// Largest magnitude where `θ_i ϑ_k = 0`.
    pub max_off: f64,
    pub violations: Vec<String>,
}

impl StructureReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Nonzero vectors in `{0,1}^len` in increasing binary order, at most `cap` of them.
pub fn nonzero_patterns(len: usize, cap: usize) -> Vec<Vec<bool>> {
    let total: u64 = if len >= 63 { u64::MAX } else { (1u64 << len) - 1 };
    (1..=total)
        .take(cap)
        .map(|bits| (0..len).map(|k| bits >> k & 1 == 1).collect())
        .collect()
}

fn hat_axis(centers: &[Vec<f64>]) -> Vec<f64> {
    let mut axis: Vec<f64> = centers.iter().map(|c| c[0]).collect();
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    let mut out = Vec::with_capacity(2 * axis.len());
    for (k, &a) in axis.iter().enumerate() {
        out.push(a);
        if let Some(&b) = axis.get(k + 1) {
            out.push(0.5 * (a + b));
        }
    }
    out
}

fn cartesian(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
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

/// Builds `g_{-,θ} = Σ θ_i g_{-,i}` and the switched flows `b^ϑ`, and
/// evaluates `q_{θ,ϑ}` on the product grid. Every `θ` and `ϑ` must be nonzero.
pub fn variable_b_family(
    map: &ReferenceMap,
    spec: VariableBSpec,
    thetas: &[Vec<bool>],
    varthetas: &[Vec<bool>],
) -> Result<VariableBFamily> {
    let d = map.dim();
    if d < 2 {
        return Err(Error::InvalidInput("variable-flow families need d >= 2".into()));
    }
    let base = FlowField::new(map.clone(), spec.s_b)?;
    let family = build_family(
        &base,
        FamilySpec {
            h: spec.h,
            s_minus: spec.s_minus,
            s_plus: spec.s_plus,
            p: spec.p,
            d_bar: d - 2,
            normalization: Normalization::Superposition,
        },
    )?;
    let k_count = SwitchFunction::center_count(spec.dim_hat, spec.h, spec.s_b);
    for t in thetas {
        if t.len() != family.len() || !t.iter().any(|&b| b) {
            return Err(Error::InvalidInput(format!(
                "θ must be a nonzero vector of length {}",
                family.len()
            )));
        }
    }
    for v in varthetas {
        if v.len() != k_count || !v.iter().any(|&b| b) {
            return Err(Error::InvalidInput(format!("ϑ must be a nonzero vector of length {k_count}")));
        }
    }
    let probe = SwitchFunction::new(spec.dim_hat, spec.h, spec.s_b, vec![false; k_count])?;
    let switch_centers = probe.centers().to_vec();
    let hats = cartesian(&hat_axis(&switch_centers), spec.dim_hat);
    let bars = param_grid(spec.h, d - 2, None);
    let mut grid = Vec::with_capacity(bars.len() * hats.len());
    for b in &bars {
        for m in &hats {
            grid.push(b.iter().chain(m).copied().collect::<Vec<f64>>());
        }
    }
    let mut natural = Vec::with_capacity(bars.len() * switch_centers.len());
    for (bi, _) in bars.iter().enumerate() {
        for c in &switch_centers {
            let mi = hats
                .iter()
                .position(|m| m.iter().zip(c).all(|(a, b)| (a - b).abs() < 1e-12))
                .expect("switch centers lie on the hat grid");
            natural.push(bi * hats.len() + mi);
        }
    }

    let labels: Vec<(usize, usize)> = (0..thetas.len())
        .flat_map(|a| (0..varthetas.len()).map(move |b| (a, b)))
        .collect();
    let g_plus = Arc::new(family.g_plus().clone());
    let curves = labels
        .par_iter()
        .map(|&(a, b)| {
            let switch = SwitchFunction::new(spec.dim_hat, spec.h, spec.s_b, varthetas[b].clone())?;
            let field = FlowField::switched(map.clone(), switch)?;
            let g_minus = family
                .superposition(&thetas[a])
                .expect("θ is nonzero");
            let prob = TransportProblem::new(field, Arc::new(g_minus), g_plus.clone())?;
            let meta = CurveMeta {
                label: format!("theta={} vartheta={}", bits(&thetas[a]), bits(&varthetas[b])),
                h: Some(spec.h),
                s_minus: Some(spec.s_minus),
                s_plus: Some(spec.s_plus),
            };
            qoi_curve(&prob, &grid, meta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VariableBFamily {
        family,
        switch_centers,
        thetas: thetas.to_vec(),
        varthetas: varthetas.to_vec(),
        labels,
        curves,
        grid,
        natural,
    })
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl VariableBFamily {
    pub fn n(&self) -> usize {
        self.family.len()
    }

    pub fn k(&self) -> usize {
        self.switch_centers.len()
    }

    /// `q_c(μ̄_i, μ̂_k)`.
    pub fn value(&self, curve: usize, i: usize, k: usize) -> f64 {
        self.curves[curve].values()[self.natural[i * self.k() + k]]
    }

    /// Smallest value over all curves at grid points where `θ_i = ϑ_k = 1`.
    pub fn min_diagonal(&self) -> f64 {
        let mut m = f64::INFINITY;
        for (c, &(a, b)) in self.labels.iter().enumerate() {
            for i in 0..self.n() {
                for k in 0..self.k() {
                    if self.thetas[a][i] && self.varthetas[b][k] {
                        m = m.min(self.value(c, i, k));
                    }
                }
            }
        }
        m
    }

    /// Checks `q(μ̄_i, μ̂_k) > eps` iff `θ_i = ϑ_k = 1` and `|q| < tol` otherwise;
    /// off-natural grid points must vanish too.
    pub fn product_structure(&self, eps: f64) -> StructureReport {
        let peak = self.curves.iter().map(|c| c.sup_norm()).fold(0.0, f64::max);
        let tol = ZERO_THRESHOLD * peak;
        let mut min_on = f64::INFINITY;
        let mut max_off: f64 = 0.0;
        let mut violations = Vec::new();
        for (c, &(a, b)) in self.labels.iter().enumerate() {
            for i in 0..self.n() {
                for k in 0..self.k() {
                    let v = self.value(c, i, k);
                    if self.thetas[a][i] && self.varthetas[b][k] {
                        min_on = min_on.min(v);
                        if v <= eps {
                            violations.push(format!("{}: value {v:e} at (i={i}, k={k}) not above ε", self.curves[c].meta().label));
                        }
                    } else {
                        max_off = max_off.max(v.abs());
                        if v.abs() >= tol {
                            violations.push(format!("{}: value {v:e} at (i={i}, k={k}) should vanish", self.curves[c].meta().label));
                        }
                    }
                }
            }
            for (g, v) in self.curves[c].values().iter().enumerate() {
                if !self.natural.contains(&g) {
                    max_off = max_off.max(v.abs());
                    if v.abs() >= tol {
                        violations.push(format!("{}: value {v:e} at grid point {g} between switch centers", self.curves[c].meta().label));
                    }
                }
            }
        }
        StructureReport {
            min_on,
            max_off,
            violations,
        }
    }
}
