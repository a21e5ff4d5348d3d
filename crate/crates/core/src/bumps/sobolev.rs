//! Integer-order Sobolev norms of boundary functions.

use crate::boundary::{intersect_boxes, SmoothFunction};
use crate::error::{Error, Result};
use crate::jet::JetSpace;
use crate::quadrature::{integrate_refined, panels_for_spacing, BoxDomain, Tolerance};

/// Lebesgue exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidInput(format!("Lebesgue exponent must be >= 1, got {p}")))
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

const RELATIVE_TOLERANCE: f64 = 1e-6;
const NODES_PER_SCALE: f64 = 12.0;
// Cap on tensor nodes per refinement level.
const NODE_BUDGET: f64 = 6.0e7;

/// `‖f‖_{W^{s,p}}` over `patch`.
///
/// For finite `p` this is `(Σ_{|α|≤s} ‖D^α f‖_p^p)^{1/p}`; for `p = ∞` it is
/// `max_{|α|≤s} ‖D^α f‖_∞`.
pub fn sobolev_norm(f: &dyn SmoothFunction, s: usize, p: Exponent, patch: &[(f64, f64)]) -> Result<f64> {
    if patch.len() != f.dim() {
        return Err(Error::InvalidInput(format!(
            "patch of dimension {} for a function of dimension {}",
            patch.len(),
            f.dim()
        )));
    }
    let domain = match f.support_box() {
        Some(support) => match intersect_boxes(&support, patch) {
            Some(d) => d,
            None => return Ok(0.0),
        },
        None => patch.to_vec(),
    };
    let space = JetSpace::new(f.dim(), s);
    match p {
        Exponent::Finite(p) => finite_norm(f, &space, p, &domain),
        Exponent::Infinity => sup_norm(f, &space, &domain),
    }
}

fn initial_spacing(f: &dyn SmoothFunction) -> f64 {
    f.length_scale() / NODES_PER_SCALE
}

fn finite_norm(f: &dyn SmoothFunction, space: &JetSpace, p: f64, domain: &BoxDomain) -> Result<f64> {
    let longest = domain.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut panels = panels_for_spacing(longest, initial_spacing(f));
    panels += panels % 2;
    let dim = domain.len().max(1) as i32;
    let mut max_refinements = 0;
    let mut nodes = (panels * crate::quadrature::PANEL_ORDER) as f64;
    while max_refinements < 10 && (2.0 * nodes).powi(dim) <= NODE_BUDGET {
        nodes *= 2.0;
        max_refinements += 1;
    }
    let integrand = |z: &[f64]| -> f64 { f.derivatives(z, space).iter().map(|d| d.abs().powf(p)).sum() };
    let tol = Tolerance {
        relative: RELATIVE_TOLERANCE,
        absolute: 0.0,
    };
    let integral = integrate_refined(domain, panels, tol, max_refinements, integrand)?;
    Ok(integral.powf(1.0 / p))
}

fn pointwise_max(f: &dyn SmoothFunction, space: &JetSpace, z: &[f64]) -> f64 {
    f.derivatives(z, space).iter().fold(0.0, |m, d| m.max(d.abs()))
}

/// Visits a regular grid with `counts[k]` points on each axis of `domain`.
fn for_each_grid_point(domain: &[(f64, f64)], counts: &[usize], mut visit: impl FnMut(&[f64])) {
    let dim = domain.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    loop {
        for k in 0..dim {
            let (a, b) = domain[k];
            point[k] = if counts[k] == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * idx[k] as f64 / (counts[k] - 1) as f64
            };
        }
        visit(&point);
        let mut k = dim;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

const CANDIDATES: usize = 8;
const ZOOM_LEVELS: usize = 14;
const ZOOM_POINTS: usize = 9;

fn sup_at_spacing(f: &dyn SmoothFunction, space: &JetSpace, domain: &BoxDomain, spacing: f64) -> f64 {
    let counts: Vec<usize> = domain
        .iter()
        .map(|(a, b)| ((b - a) / spacing).ceil() as usize + 1)
        .collect();
    let mut best: Vec<(f64, Vec<f64>)> = Vec::with_capacity(CANDIDATES + 1);
    for_each_grid_point(domain, &counts, |z| {
        let v = pointwise_max(f, space, z);
        if best.len() < CANDIDATES || v > best[best.len() - 1].0 {
            let pos = best.iter().position(|(b, _)| v > *b).unwrap_or(best.len());
            best.insert(pos, (v, z.to_vec()));
            best.truncate(CANDIDATES);
        }
    });
    let mut result = best.first().map(|b| b.0).unwrap_or(0.0);
    for (value, centre) in best {
        let mut centre = centre;
        let mut value = value;
        let mut radius = spacing;
        for _ in 0..ZOOM_LEVELS {
            let local: BoxDomain = centre
                .iter()
                .zip(domain)
                .map(|(&c, &(a, b))| ((c - radius).max(a), (c + radius).min(b)))
                .collect();
            let counts = vec![ZOOM_POINTS; local.len()];
            for_each_grid_point(&local, &counts, |z| {
                let v = pointwise_max(f, space, z);
                if v > value {
                    value = v;
                    centre = z.to_vec();
                }
            });
            radius /= 4.0;
        }
        result = result.max(value);
    }
    result
}

fn sup_norm(f: &dyn SmoothFunction, space: &JetSpace, domain: &BoxDomain) -> Result<f64> {
    let mut spacing = initial_spacing(f);
    let mut previous = sup_at_spacing(f, space, domain, spacing);
    for _ in 0..4 {
        spacing /= 2.0;
        let current = sup_at_spacing(f, space, domain, spacing);
        if (current - previous).abs() <= RELATIVE_TOLERANCE * current.abs() {
            return Ok(current.max(previous));
        }
        previous = current;
    }
    Err(Error::Quadrature(format!(
        "sup-norm search did not stabilise (last value {previous:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Constant;
    use crate::bumps::ScaledBump;

    #[test]
    fn constant_on_unit_patch() {
        let one = Constant { dim: 1, value: 1.0 };
        let patch = vec![(0.0, 1.0)];
        let n = sobolev_norm(&one, 0, Exponent::Finite(2.0), &patch).unwrap();
        assert!((n - 1.0).abs() < 1e-14);
        let n = sobolev_norm(&one, 2, Exponent::Infinity, &patch).unwrap();
        assert!((n - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_laws_in_one_dimension() {
        let patch = vec![(-1.0, 1.0)];
        let bump = |h: f64| ScaledBump::new(vec![0.0], h, 1.0);
        let n2 = |h: f64| sobolev_norm(&bump(h), 1, Exponent::Finite(2.0), &patch).unwrap();
        let ratio = n2(0.025) / n2(0.05);
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.02, "ratio {ratio}");
        let ninf = |h: f64| sobolev_norm(&bump(h), 1, Exponent::Infinity, &patch).unwrap();
        let ratio = ninf(0.025) / ninf(0.05);
        assert!((ratio / 2.0 - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn sup_norm_of_psi_is_attained_derivative() {
        // max |ψ'| on the line: ψ'(x) = -2x ψ(x)/(1-x²)², checked on a fine grid
        let b = ScaledBump::new(vec![0.0], 1.0, 1.0);
        let got = sobolev_norm(&b, 1, Exponent::Infinity, &[(-1.0, 1.0)]).unwrap();
        let mut want: f64 = 1.0;
        for k in 0..2_000_001 {
            let x = -1.0 + 2.0 * k as f64 / 2_000_000.0;
            let u = 1.0 - x * x;
            if u > 0.0 {
                let v = 2.0 * x.abs() * crate::bumps::mollifier::psi(&[x]) / (u * u);
                want = want.max(v);
            }
        }
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }
}
