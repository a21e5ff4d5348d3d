//! Functions on a boundary face, written in face coordinates `z ∈ [-1,1]^m`.

use std::fmt;
use std::sync::Arc;

use crate::jet::JetSpace;
use crate::quadrature::BoxDomain;

/// A scalar function on a face cross-section.
pub trait BoundaryFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, z: &[f64]) -> f64;

    /// Box containing the support, or `None` for the whole face.
    fn support_box(&self) -> Option<BoxDomain>;

    /// Upper bound on `sup |f|`.
    fn amplitude(&self) -> f64;

    /// Smallest length over which the function varies; drives quadrature resolution.
    fn length_scale(&self) -> f64;
}

/// A boundary function that also exposes partial derivatives.
pub trait SmoothFunction: BoundaryFunction {
    /// All `D^α f(z)` for the multi-indices of `space`, in its order.
    fn derivatives(&self, z: &[f64], space: &JetSpace) -> Vec<f64>;
}

/// Intersection of two boxes, `None` if empty.
pub fn intersect_boxes(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<BoxDomain> {
    let mut out = Vec::with_capacity(a.len());
    for (&(a0, a1), &(b0, b1)) in a.iter().zip(b) {
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        if hi <= lo {
            return None;
        }
        out.push((lo, hi));
    }
    Some(out)
}

/// The face `[-1,1]^m`.
pub fn full_face(dim: usize) -> BoxDomain {
    vec![(-1.0, 1.0); dim]
}

pub fn box_volume(domain: &[(f64, f64)]) -> f64 {
    domain.iter().map(|(a, b)| b - a).product()
}

/// Constant function on the whole face.
#[derive(Clone, Debug)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl BoundaryFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _z: &[f64]) -> f64 {
        self.value
    }

    fn support_box(&self) -> Option<BoxDomain> {
        None
    }

    fn amplitude(&self) -> f64 {
        self.value.abs()
    }

    fn length_scale(&self) -> f64 {
        1.0
    }
}

impl SmoothFunction for Constant {
    fn derivatives(&self, _z: &[f64], space: &JetSpace) -> Vec<f64> {
        space.constant(self.value)
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A boundary function given by a closure plus declared metadata.
#[derive(Clone)]
pub struct FnBoundary {
    dim: usize,
    f: Arc<ScalarFn>,
    support: Option<BoxDomain>,
    amplitude: f64,
    length_scale: f64,
}

impl FnBoundary {
    pub fn new(
        dim: usize,
        support: Option<BoxDomain>,
        amplitude: f64,
        length_scale: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            support,
            amplitude,
            length_scale,
        }
    }
}

impl fmt::Debug for FnBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnBoundary")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("amplitude", &self.amplitude)
            .field("length_scale", &self.length_scale)
            .finish()
    }
}

impl BoundaryFunction for FnBoundary {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }

    fn support_box(&self) -> Option<BoxDomain> {
        self.support.clone()
    }

    fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn length_scale(&self) -> f64 {
        self.length_scale
    }
}

/// `Σ c_k f_k`.
#[derive(Clone)]
pub struct LinearCombination {
    terms: Vec<(f64, Arc<dyn BoundaryFunction>)>,
}

impl LinearCombination {
    /// Panics if `terms` is empty or dimensions differ.
    pub fn new(terms: Vec<(f64, Arc<dyn BoundaryFunction>)>) -> Self {
        assert!(!terms.is_empty(), "linear combination needs a term");
        let dim = terms[0].1.dim();
        assert!(terms.iter().all(|(_, f)| f.dim() == dim), "dimension mismatch");
        Self { terms }
    }
}

impl BoundaryFunction for LinearCombination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(z)).sum()
    }

    fn support_box(&self) -> Option<BoxDomain> {
        let mut acc: Option<BoxDomain> = None;
        for (c, f) in &self.terms {
            if *c == 0.0 {
                continue;
            }
            let b = f.support_box()?;
            acc = Some(match acc {
                None => b,
                Some(a) => a
                    .iter()
                    .zip(&b)
                    .map(|(&(a0, a1), &(b0, b1))| (a0.min(b0), a1.max(b1)))
                    .collect(),
            });
        }
        acc.or_else(|| Some(vec![(0.0, 0.0); self.dim()]))
    }

    fn amplitude(&self) -> f64 {
        self.terms.iter().map(|(c, f)| c.abs() * f.amplitude()).sum()
    }

    fn length_scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, f)| f.length_scale())
            .fold(f64::INFINITY, f64::min)
    }
}
