//! Packing certificates, greedy covers and bit codebooks for sets of QoI
//! curves in the sup norm.

mod rate;
mod variable_b;

pub use rate::{piecewise_poly_upper, rate_fit, smoothness_probe, RateFit, SmoothnessProbe, FD_STEPS};
pub use variable_b::{nonzero_patterns, variable_b_family, StructureReport, VariableBFamily, VariableBSpec};

use std::sync::Arc;

use rayon::prelude::*;

use crate::bumps::ProblemFamily;
use crate::error::{Error, Result};
use crate::refdomain::FlowField;
use crate::transport::{qoi_curve, sup_gap, CurveMeta, QoICurve, TransportProblem};

/// Relative threshold, against the peak diagonal value, below which a QoI
/// value counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateForm {
    /// Disjoint-support construction: `n_ent = n - 1`, bound `ε`.
    DisjointSupport,
    /// Pairwise-separated family: `n_ent = ⌊log₂(|Θ|-1)⌋`, bound `ε/2`.
    Counting,
}

/// Measured separation of two curves at a grid witness.
#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    pub first: usize,
    pub second: usize,
    pub witness: usize,
    pub gap: f64,
}

/// A verified entropy lower bound `ε_{n_ent} ≥ bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct PackingCertificate {
    pub form: CertificateForm,
    pub family_size: usize,
    pub epsilon: f64,
    pub n_ent: usize,
    pub bound: f64,
    /// Grid parameters used as witnesses, indexed by [`Separation::witness`].
    pub witnesses: Vec<Vec<f64>>,
    pub separations: Vec<Separation>,
    /// Largest off-diagonal magnitude (disjoint form only).
    pub max_cross: f64,
}

impl PackingCertificate {
    /// Re-checks every recorded separation against freshly supplied curves.
    ///
    /// Counting certificates need gaps strictly above `ε`; disjoint-support
    /// certificates take `ε` as the smallest diagonal value and need gaps of
    /// at least `ε`.
    pub fn reverify(&self, curves: &[QoICurve]) -> Result<()> {
        if curves.len() != self.family_size {
            return Err(Error::InvalidInput(format!(
                "certificate covers {} curves, got {}",
                self.family_size,
                curves.len()
            )));
        }
        for s in &self.separations {
            let a = &curves[s.first];
            let b = &curves[s.second];
            if !a.same_grid(b) {
                return Err(Error::InvalidInput("curves live on different grids".into()));
            }
            let gap = (a.values()[s.witness] - b.values()[s.witness]).abs();
            let ok = match self.form {
                CertificateForm::Counting => gap > self.epsilon,
                CertificateForm::DisjointSupport => gap >= self.epsilon,
            };
            if !ok {
                return Err(Error::CertificateRefused {
                    first: s.first,
                    second: s.second,
                    reason: format!("recomputed gap {gap:e} does not exceed ε = {:e}", self.epsilon),
                });
            }
        }
        Ok(())
    }
}

/// Curves `μ ↦ q_i(μ)` of every family member on a common grid.
#[derive(Clone, Debug)]
pub struct FamilyCurves {
    pub curves: Vec<QoICurve>,
    /// Grid index of `μ_i` for each member.
    pub param_indices: Vec<usize>,
}

impl FamilyCurves {
    /// `matrix[i][j] = q_i(μ_j)`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.curves
            .iter()
            .map(|c| self.param_indices.iter().map(|&j| c.values()[j]).collect())
            .collect()
    }
}

fn grid_index(grid: &[Vec<f64>], mu: &[f64]) -> Option<usize> {
    grid.iter()
        .position(|g| g.len() == mu.len() && g.iter().zip(mu).all(|(a, b)| (a - b).abs() <= 1e-12))
}

/// Evaluates each `q_i` on `grid`; `grid` must contain every `μ_i`.
pub fn family_curves(family: &ProblemFamily, field: &FlowField, grid: &[Vec<f64>]) -> Result<FamilyCurves> {
    let param_indices = family
        .params()
        .iter()
        .map(|mu| {
            grid_index(grid, mu).ok_or_else(|| Error::InvalidInput(format!("grid does not contain μ_i = {mu:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let g_plus = Arc::new(family.g_plus().clone());
    let curves = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let prob = TransportProblem::new(field.clone(), Arc::new(family.g_minus(i).clone()), g_plus.clone())?;
            let meta = CurveMeta {
                label: format!("q_{i}"),
                h: Some(family.h()),
                s_minus: Some(family.spec().s_minus),
                s_plus: Some(family.spec().s_plus),
            };
            qoi_curve(&prob, grid, meta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyCurves { curves, param_indices })
}

/// Disjoint-support certificate from precomputed family curves.
///
/// Refuses if any cross value `q_i(μ_j)`, `i ≠ j`, exceeds
/// [`ZERO_THRESHOLD`] times the peak diagonal value, or if two curves are
/// nonzero at the same grid point.
pub fn certificate_from_curves(fc: &FamilyCurves) -> Result<PackingCertificate> {
    let n = fc.curves.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty family".into()));
    }
    let matrix = fc.matrix();
    let peak = (0..n).map(|i| matrix[i][i].abs()).fold(0.0, f64::max);
    let mut max_cross: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = matrix[i][j].abs();
            max_cross = max_cross.max(v);
            if v > ZERO_THRESHOLD * peak {
                return Err(Error::CertificateRefused {
                    first: i,
                    second: j,
                    reason: format!("cross value q_{i}(μ_{j}) = {v:e} exceeds {ZERO_THRESHOLD:e} × peak {peak:e}"),
                });
            }
        }
    }
    if let Some((a, b)) = overlapping_supports(&fc.curves) {
        return Err(Error::CertificateRefused {
            first: a,
            second: b,
            reason: "curves are nonzero at a common grid point".into(),
        });
    }
    let epsilon = (0..n).map(|i| matrix[i][i]).fold(f64::INFINITY, f64::min);
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::CertificateRefused {
            first: 0,
            second: 0,
            reason: format!("smallest diagonal value {epsilon:e} is not positive"),
        });
    }
    let mut separations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = fc.param_indices[i];
            let gap = (fc.curves[i].values()[w] - fc.curves[j].values()[w]).abs();
            separations.push(Separation {
                first: i,
                second: j,
                witness: w,
                gap,
            });
        }
    }
    Ok(PackingCertificate {
        form: CertificateForm::DisjointSupport,
        family_size: n,
        epsilon,
        n_ent: n - 1,
        bound: epsilon,
        witnesses: fc.curves[0].params().to_vec(),
        separations,
        max_cross,
    })
}

/// Evaluates the family on `grid` and certifies it.
pub fn certificate_disjoint(family: &ProblemFamily, field: &FlowField, grid: &[Vec<f64>]) -> Result<PackingCertificate> {
    certificate_from_curves(&family_curves(family, field, grid)?)
}

/// First pair of curves that are both nonzero at some grid point.
pub fn overlapping_supports(curves: &[QoICurve]) -> Option<(usize, usize)> {
    let len = curves.first()?.len();
    for k in 0..len {
        let mut seen: Option<usize> = None;
        for (i, c) in curves.iter().enumerate() {
            if c.values()[k] != 0.0 {
                if let Some(first) = seen {
                    return Some((first, i));
                }
                seen = Some(i);
            }
        }
    }
    None
}

/// Independent check of a disjoint-support certificate against a value
/// matrix `q_i(μ_j)` computed by another route.
///
/// Diagonal values may fall below `ε` by the relative amount `rel_tol`.
pub fn reverify_disjoint(cert: &PackingCertificate, matrix: &[Vec<f64>], rel_tol: f64) -> Result<()> {
    let n = matrix.len();
    if n != cert.family_size {
        return Err(Error::InvalidInput(format!("matrix has {n} rows, certificate {}", cert.family_size)));
    }
    let peak = (0..n).map(|i| matrix[i][i].abs()).fold(0.0, f64::max);
    for i in 0..n {
        if matrix[i][i] < cert.epsilon * (1.0 - rel_tol) {
            return Err(Error::CertificateRefused {
                first: i,
                second: i,
                reason: format!("diagonal {:e} below ε = {:e}", matrix[i][i], cert.epsilon),
            });
        }
        for j in 0..n {
            if i != j && matrix[i][j].abs() > ZERO_THRESHOLD * peak {
                return Err(Error::CertificateRefused {
                    first: i,
                    second: j,
                    reason: format!("cross value {:e}", matrix[i][j]),
                });
            }
        }
    }
    Ok(())
}

fn check_common_grid(curves: &[QoICurve]) -> Result<()> {
    if let Some(first) = curves.first() {
        if curves.iter().any(|c| !c.same_grid(first)) {
            return Err(Error::InvalidInput("curves live on different grids".into()));
        }
    }
    Ok(())
}

/// Counting-form certificate: every pair must differ by more than `eps` at
/// some grid point. Witnesses are searched among `preferred` grid indices
/// first, then the whole grid.
pub fn certificate_count(curves: &[QoICurve], eps: f64, preferred: Option<&[usize]>) -> Result<PackingCertificate> {
    if curves.len() < 2 {
        return Err(Error::InvalidInput("counting certificate needs at least two curves".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("separation must be positive, got {eps}")));
    }
    check_common_grid(curves)?;
    let len = curves[0].len();
    let all: Vec<usize> = (0..len).collect();
    let preferred: Vec<usize> = preferred.map(|p| p.to_vec()).unwrap_or_default();
    if preferred.iter().any(|&k| k >= len) {
        return Err(Error::InvalidInput("preferred witness index outside the grid".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..curves.len())
        .flat_map(|i| (i + 1..curves.len()).map(move |j| (i, j)))
        .collect();
    let best_in = |a: &QoICurve, b: &QoICurve, idx: &[usize]| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &k in idx {
            let gap = (a.values()[k] - b.values()[k]).abs();
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((k, gap));
            }
        }
        best
    };
    let separations = pairs
        .par_iter()
        .map(|&(i, j)| {
            let found = best_in(&curves[i], &curves[j], &preferred)
                .filter(|&(_, g)| g > eps)
                .or_else(|| best_in(&curves[i], &curves[j], &all).filter(|&(_, g)| g > eps));
            match found {
                Some((witness, gap)) => Ok(Separation {
                    first: i,
                    second: j,
                    witness,
                    gap,
                }),
                None => Err(Error::CertificateRefused {
                    first: i,
                    second: j,
                    reason: format!("no grid point separates the pair by more than {eps:e}"),
                }),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n_ent = (usize::BITS - 1 - (curves.len() - 1).leading_zeros()) as usize;
    Ok(PackingCertificate {
        form: CertificateForm::Counting,
        family_size: curves.len(),
        epsilon: eps,
        n_ent,
        bound: eps / 2.0,
        witnesses: curves[0].params().to_vec(),
        separations,
        max_cross: 0.0,
    })
}

/// Result of a greedy farthest-point cover.
#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    /// Indices of the chosen centers, in selection order.
    pub centers: Vec<usize>,
    /// For each curve, the position in `centers` of its nearest center.
    pub assignment: Vec<usize>,
    /// Largest distance from a curve to its nearest center.
    pub radius: f64,
}

impl Cover {
    pub fn size(&self) -> usize {
        self.centers.len()
    }
}

/// Farthest-point cover in the sup norm: starts from curve 0 and adds the
/// curve farthest from all centers until every curve is within `eps`.
pub fn greedy_cover(curves: &[QoICurve], eps: f64) -> Result<Cover> {
    if curves.is_empty() {
        return Err(Error::InvalidInput("cannot cover an empty set".into()));
    }
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidInput(format!("cover radius must be non-negative, got {eps}")));
    }
    check_common_grid(curves)?;
    let mut centers = vec![0usize];
    let mut nearest: Vec<f64> = curves.iter().map(|c| sup_gap(c.values(), curves[0].values())).collect();
    let mut assignment = vec![0usize; curves.len()];
    loop {
        let (far, dist) = nearest
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
        if dist <= eps {
            return Ok(Cover {
                centers,
                assignment,
                radius: dist.max(0.0),
            });
        }
        let slot = centers.len();
        centers.push(far);
        for (i, c) in curves.iter().enumerate() {
            let d = sup_gap(c.values(), curves[far].values());
            if d < nearest[i] {
                nearest[i] = d;
                assignment[i] = slot;
            }
        }
    }
}

/// Greedy packing: scans curves in order and keeps those more than `sep`
/// away from every kept curve.
pub fn greedy_packing(curves: &[QoICurve], sep: f64) -> Result<Vec<usize>> {
    check_common_grid(curves)?;
    let mut kept: Vec<usize> = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        if kept.iter().all(|&k| sup_gap(c.values(), curves[k].values()) > sep) {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// `n`-bit encoder/decoder built from a cover: a curve is encoded by the
/// index of its nearest center and decoded to that center.
#[derive(Clone, Debug)]
pub struct BitCodebook {
    centers: Vec<QoICurve>,
    bits: usize,
}

impl BitCodebook {
    pub fn from_cover(curves: &[QoICurve], cover: &Cover) -> Self {
        let centers: Vec<QoICurve> = cover.centers.iter().map(|&i| curves[i].clone()).collect();
        let bits = if centers.len() <= 1 {
            0
        } else {
            (usize::BITS - (centers.len() - 1).leading_zeros()) as usize
        };
        Self { centers, bits }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn encode(&self, curve: &QoICurve) -> Result<u64> {
        let mut best = (0usize, f64::INFINITY);
        for (k, c) in self.centers.iter().enumerate() {
            let d = c.sup_distance(curve)?;
            if d < best.1 {
                best = (k, d);
            }
        }
        Ok(best.0 as u64)
    }

    pub fn decode(&self, code: u64) -> Result<&QoICurve> {
        self.centers
            .get(code as usize)
            .ok_or_else(|| Error::InvalidInput(format!("code {code} outside the codebook")))
    }

    /// `max_c ‖c - decode(encode(c))‖_∞` over `curves`.
    pub fn worst_error(&self, curves: &[QoICurve]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for c in curves {
            let decoded = self.decode(self.encode(c)?)?;
            worst = worst.max(decoded.sup_distance(c)?);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(values: Vec<f64>) -> QoICurve {
        let grid: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
        QoICurve::from_scalar_grid(&grid, values, CurveMeta::default()).unwrap()
    }

    fn disjoint(n: usize, height: f64) -> Vec<QoICurve> {
        (0..n)
            .map(|i| curve((0..n).map(|k| if k == i { height } else { 0.0 }).collect()))
            .collect()
    }

    #[test]
    fn counting_examples() {
        let a = curve(vec![0.0, 0.3]);
        let b = curve(vec![0.0, 0.0]);
        let c = certificate_count(&[a.clone(), b.clone()], 0.2, None).unwrap();
        assert_eq!((c.n_ent, c.bound), (0, 0.1));
        assert_eq!(c.separations[0].witness, 1);
        assert!(matches!(
            certificate_count(&[a, b], 0.3, None),
            Err(Error::CertificateRefused { first: 0, second: 1, .. })
        ));
        let nine = disjoint(9, 1.0);
        let c = certificate_count(&nine, 0.5, Some(&[0, 1])).unwrap();
        assert_eq!(c.n_ent, 3);
        c.reverify(&nine).unwrap();
    }

    #[test]
    fn preferred_witnesses_come_first() {
        let a = curve(vec![1.0, 2.0, 0.0]);
        let b = curve(vec![0.0, 0.0, 0.0]);
        let c = certificate_count(&[a.clone(), b.clone()], 0.5, Some(&[0])).unwrap();
        assert_eq!(c.separations[0].witness, 0);
        let c = certificate_count(&[a, b], 1.5, Some(&[0])).unwrap();
        assert_eq!(c.separations[0].witness, 1);
    }

    #[test]
    fn disjoint_certificate_from_synthetic_curves() {
        let curves = disjoint(4, 2.0);
        let fc = FamilyCurves {
            curves: curves.clone(),
            param_indices: vec![0, 1, 2, 3],
        };
        let cert = certificate_from_curves(&fc).unwrap();
        assert_eq!((cert.n_ent, cert.epsilon, cert.bound), (3, 2.0, 2.0));
        cert.reverify(&curves).unwrap();
        reverify_disjoint(&cert, &fc.matrix(), 0.0).unwrap();
        let single = FamilyCurves {
            curves: vec![curve(vec![0.7])],
            param_indices: vec![0],
        };
        let cert = certificate_from_curves(&single).unwrap();
        assert_eq!((cert.n_ent, cert.epsilon), (0, 0.7));
        let mut bad = disjoint(3, 1.0);
        bad[2] = curve(vec![1e-6, 0.0, 1.0]);
        let fc = FamilyCurves {
            curves: bad,
            param_indices: vec![0, 1, 2],
        };
        assert!(matches!(
            certificate_from_curves(&fc),
            Err(Error::CertificateRefused { first: 2, second: 0, .. })
        ));
    }

    #[test]
    fn cover_examples() {
        let same = vec![curve(vec![1.0, 2.0]); 5];
        assert_eq!(greedy_cover(&same, 1e-9).unwrap().size(), 1);
        let d = disjoint(6, 0.8);
        assert_eq!(greedy_cover(&d, 0.39).unwrap().size(), 6);
        assert_eq!(greedy_cover(&d, 0.8).unwrap().size(), 1);
    }

    #[test]
    fn codebook_error_equals_cover_radius() {
        let curves: Vec<QoICurve> = (0..8).map(|k| curve(vec![k as f64 * 0.1, (k % 3) as f64])).collect();
        let cover = greedy_cover(&curves, 0.25).unwrap();
        let book = BitCodebook::from_cover(&curves, &cover);
        assert_eq!(book.worst_error(&curves).unwrap(), cover.radius);
        assert!(book.bits() <= 3);
    }

    fn arb_curves() -> impl Strategy<Value = Vec<QoICurve>> {
        proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 1..12)
            .prop_map(|rows| rows.into_iter().map(curve).collect())
    }

    proptest! {
        #[test]
        fn cover_size_is_monotone(curves in arb_curves(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(greedy_cover(&curves, lo).unwrap().size() >= greedy_cover(&curves, hi).unwrap().size());
        }

        #[test]
        fn packing_never_exceeds_cover(curves in arb_curves(), eps in 0.01f64..1.0) {
            let packed = greedy_packing(&curves, 2.0 * eps).unwrap();
            let cover = greedy_cover(&curves, eps).unwrap();
            prop_assert!(packed.len() <= cover.size());
            prop_assert!(cover.radius <= eps);
            let book = BitCodebook::from_cover(&curves, &cover);
            prop_assert_eq!(book.worst_error(&curves).unwrap(), cover.radius);
        }

        #[test]
        fn counting_certificates_reverify(curves in arb_curves(), eps in 0.01f64..0.5) {
            if let Ok(cert) = certificate_count(&curves, eps, None) {
                prop_assert!(cert.separations.iter().all(|s| s.gap > eps));
                prop_assert!(cert.reverify(&curves).is_ok());
            }
        }
    }
}
