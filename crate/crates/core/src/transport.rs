//! Characteristic solutions of `b_μ · ∇u_μ = f` and their outflow
//! quantities of interest `q(μ) = ∫_{Γ_+} g_+ u_μ`.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary::{box_volume, intersect_boxes, BoundaryFunction};
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_refined, panels_for_spacing, BoxDomain, CompositeRule, GaussLegendre, NeumaierSum, Tolerance,
    PANEL_ORDER,
};
use crate::refdomain::{FlowField, BOX_SLACK};

// Tighter than the 1e-8 accuracy target so that qoi stays linear in g_- to roundoff.
pub const QOI_RELATIVE_TOLERANCE: f64 = 1e-10;
const QOI_ABSOLUTE_FACTOR: f64 = 1e-14;
const NODES_PER_SCALE: f64 = 12.0;
const NODE_BUDGET: f64 = 4.0e6;

pub type SourceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Transport problem on the box with inflow data `g_-`, outflow density
/// `g_+` and an optional volume source `f`.
#[derive(Clone)]
pub struct TransportProblem {
    field: FlowField,
    g_minus: Arc<dyn BoundaryFunction>,
    g_plus: Arc<dyn BoundaryFunction>,
    plus_support: BoxDomain,
    source: Option<SourceFn>,
    source_panels: usize,
}

impl std::fmt::Debug for TransportProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransportProblem")
            .field("field", &self.field)
            .field("plus_support", &self.plus_support)
            .field("has_source", &self.source.is_some())
            .finish()
    }
}

impl TransportProblem {
    /// `g_+` must be supported inside the outflow patch `½[-1,1]^{d-1}`.
    pub fn new(field: FlowField, g_minus: Arc<dyn BoundaryFunction>, g_plus: Arc<dyn BoundaryFunction>) -> Result<Self> {
        let m = field.reference().face_dim();
        if g_minus.dim() != m || g_plus.dim() != m {
            return Err(Error::InvalidInput(format!(
                "boundary functions must have dimension {m}, got {} and {}",
                g_minus.dim(),
                g_plus.dim()
            )));
        }
        let plus_support = g_plus
            .support_box()
            .ok_or_else(|| Error::InvalidInput("g_+ must have bounded support".into()))?;
        if plus_support.iter().any(|&(a, b)| a < -0.5 - BOX_SLACK || b > 0.5 + BOX_SLACK) {
            return Err(Error::Domain(format!(
                "support of g_+ {plus_support:?} leaves the outflow patch"
            )));
        }
        let plus_support = plus_support.into_iter().map(|(a, b)| (a.max(-0.5), b.min(0.5))).collect();
        Ok(Self {
            field,
            g_minus,
            g_plus,
            plus_support,
            source: None,
            source_panels: 4,
        })
    }

    pub fn with_source(mut self, f: SourceFn) -> Self {
        self.source = Some(f);
        self
    }

    /// Panels of the composite rule for the time integral of the source.
    pub fn with_source_panels(mut self, panels: usize) -> Self {
        self.source_panels = panels.max(1);
        self
    }

    pub fn field(&self) -> &FlowField {
        &self.field
    }

    pub fn g_minus(&self) -> &Arc<dyn BoundaryFunction> {
        &self.g_minus
    }

    pub fn g_plus(&self) -> &Arc<dyn BoundaryFunction> {
        &self.g_plus
    }

    /// Copy with a different inflow function.
    pub fn with_inflow(&self, g_minus: Arc<dyn BoundaryFunction>) -> Result<Self> {
        let mut p = Self::new(self.field.clone(), g_minus, self.g_plus.clone())?;
        p.source = self.source.clone();
        p.source_panels = self.source_panels;
        Ok(p)
    }

    fn outflow_point(z: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(z.len() + 1);
        y.push(1.0);
        y.extend_from_slice(z);
        y
    }

    /// `y ↦ g_-(B_μ(y))` for `y = (1, z)` on the outflow patch.
    pub fn outflow_trace(&self, mu: &[f64]) -> Result<impl Fn(&[f64]) -> Result<f64> + '_> {
        let base = self.field.base_parameter(mu)?;
        Ok(move |y: &[f64]| {
            let x = self.field.backward_map_base(&base, y)?;
            Ok(self.g_minus.value(&x[1..]))
        })
    }

    /// `u^f(y) = ∫_0^1 f(X_μ(t; B_μ y)) dt`; zero without a source.
    pub fn source_trace(&self, mu: &[f64], y: &[f64]) -> Result<f64> {
        let base = self.field.base_parameter(mu)?;
        let rule = CompositeRule::new(0.0, 1.0, self.source_panels, PANEL_ORDER);
        self.source_trace_base(&base, y, &rule)
    }

    fn source_trace_base(&self, base: &[f64], y: &[f64], rule: &CompositeRule) -> Result<f64> {
        let Some(f) = &self.source else {
            return Ok(0.0);
        };
        let mut acc = NeumaierSum::new();
        for (t, w) in rule.nodes().iter().zip(rule.weights()) {
            let x = self.field.characteristic_through_outflow(base, y, *t)?;
            acc.add(w * f(&x));
        }
        Ok(acc.total())
    }

    fn tolerance(&self) -> Tolerance {
        let scale = self.g_plus.amplitude() * box_volume(&self.plus_support) * self.g_minus.amplitude();
        Tolerance {
            relative: QOI_RELATIVE_TOLERANCE,
            absolute: QOI_ABSOLUTE_FACTOR * scale,
        }
    }

    fn integrate_outflow(&self, mu: &[f64], with_source: bool) -> Result<f64> {
        let base = self.field.base_parameter(mu)?;
        let spacing = self.g_plus.length_scale().min(self.g_minus.length_scale()) / NODES_PER_SCALE;
        let longest = self.plus_support.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
        let panels = panels_for_spacing(longest, spacing);
        let refinements = refinement_budget(self.plus_support.len(), panels);
        let rule = CompositeRule::new(0.0, 1.0, self.source_panels, PANEL_ORDER);
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let integrand = |z: &[f64]| -> f64 {
            let gp = self.g_plus.value(z);
            if gp == 0.0 {
                return 0.0;
            }
            let y = Self::outflow_point(z);
            let mut u = match self.field.backward_map_base(&base, &y) {
                Ok(x) => self.g_minus.value(&x[1..]),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return 0.0;
                }
            };
            if with_source {
                match self.source_trace_base(&base, &y, &rule) {
                    Ok(v) => u += v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        return 0.0;
                    }
                }
            }
            gp * u
        };
        let value = integrate_refined(&self.plus_support, panels, self.tolerance(), refinements, integrand);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        value
    }

    /// `q(μ) = ∫_{Γ_+} g_+ · (g_- ∘ B_μ)`, ignoring any source.
    pub fn qoi(&self, mu: &[f64]) -> Result<f64> {
        self.integrate_outflow(mu, false)
    }

    /// `q(μ) = ∫_{Γ_+} g_+ · (g_- ∘ B_μ + u^f)`.
    pub fn qoi_with_source(&self, mu: &[f64]) -> Result<f64> {
        self.integrate_outflow(mu, self.source.is_some())
    }
}

fn refinement_budget(dim: usize, panels: usize) -> usize {
    let mut nodes = (panels * PANEL_ORDER) as f64;
    let mut k = 0;
    while k < 12 && (2.0 * nodes).powi(dim.max(1) as i32) <= NODE_BUDGET {
        nodes *= 2.0;
        k += 1;
    }
    k.max(1)
}

/// Descriptive data attached to a curve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurveMeta {
    pub label: String,
    pub h: Option<f64>,
    pub s_minus: Option<usize>,
    pub s_plus: Option<usize>,
}

impl CurveMeta {
    pub fn labelled(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }
}

/// Samples of `μ ↦ q(μ)` on a parameter grid, compared in the sup norm.
#[derive(Clone, Debug, PartialEq)]
pub struct QoICurve {
    params: Vec<Vec<f64>>,
    values: Vec<f64>,
    meta: CurveMeta,
}

impl QoICurve {
    pub fn new(params: Vec<Vec<f64>>, values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if params.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} parameters but {} values",
                params.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at grid index {k}")));
        }
        Ok(Self { params, values, meta })
    }

    /// Curve on a one-dimensional grid.
    pub fn from_scalar_grid(mus: &[f64], values: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        Self::new(mus.iter().map(|&m| vec![m]).collect(), values, meta)
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &CurveMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.params == other.params
    }

    /// `max_k |q(μ_k) - r(μ_k)|`; the curves must share a grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::InvalidInput("curves live on different grids".into()));
        }
        Ok(sup_gap(&self.values, &other.values))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Evaluates `prob.qoi` on `grid` in parallel, keeping grid order.
pub fn qoi_curve(prob: &TransportProblem, grid: &[Vec<f64>], meta: CurveMeta) -> Result<QoICurve> {
    let values: Result<Vec<f64>> = grid.par_iter().map(|mu| prob.qoi(mu)).collect();
    QoICurve::new(grid.to_vec(), values?, meta)
}

/// `∫ g_-(z + μ) g_+(z) dz` over the overlap of the shifted supports, for
/// one-dimensional faces.
pub fn convolution_reference(g_minus: &dyn BoundaryFunction, g_plus: &dyn BoundaryFunction, mu: f64) -> Result<f64> {
    if g_minus.dim() != 1 || g_plus.dim() != 1 {
        return Err(Error::InvalidInput("convolution reference needs one-dimensional faces".into()));
    }
    let plus = g_plus
        .support_box()
        .ok_or_else(|| Error::InvalidInput("g_+ must have bounded support".into()))?;
    let domain = match g_minus.support_box() {
        Some(s) => {
            let shifted = vec![(s[0].0 - mu, s[0].1 - mu)];
            match intersect_boxes(&plus, &shifted) {
                Some(d) => d,
                None => return Ok(0.0),
            }
        }
        None => plus.clone(),
    };
    let spacing = g_plus.length_scale().min(g_minus.length_scale()) / NODES_PER_SCALE;
    let panels = panels_for_spacing(domain[0].1 - domain[0].0, spacing);
    let tol = Tolerance {
        relative: QOI_RELATIVE_TOLERANCE,
        absolute: QOI_ABSOLUTE_FACTOR * g_plus.amplitude() * box_volume(&plus) * g_minus.amplitude(),
    };
    integrate_refined(&domain, panels, tol, refinement_budget(1, panels), |z| {
        g_minus.value(&[z[0] + mu]) * g_plus.value(z)
    })
}

/// Recovers `μ` from the shifted Heaviside solution `g(x - μt)`, `g = 1_{x ≥ 0}`,
/// as `2 - 2 ∫_0^1 ∫_{-1}^1 g(x - μt) dx dt`.
pub fn riemann_recovery(mu_true: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&mu_true) {
        return Err(Error::InvalidInput(format!("μ must lie in [-1, 1], got {mu_true}")));
    }
    // ∫_{-1}^{1} 1_{x ≥ μt} dx = |[max(-1, μt), 1]|
    let inner = |t: f64| (1.0 - (mu_true * t).max(-1.0)).clamp(0.0, 2.0);
    let outer = GaussLegendre::new(4).integrate(0.0, 1.0, inner);
    Ok(2.0 - 2.0 * outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{Constant, FnBoundary, LinearCombination};
    use crate::bumps::{build_family, Exponent, FamilySpec, Normalization, ScaledBump};
    use crate::refdomain::ReferenceMap;
    use proptest::prelude::*;

    fn shear2() -> FlowField {
        FlowField::new(ReferenceMap::identity(2).unwrap(), 1).unwrap()
    }

    fn bump(c: f64, h: f64) -> Arc<dyn BoundaryFunction> {
        Arc::new(ScaledBump::new(vec![c], h, 1.0))
    }

    #[test]
    fn trace_examples() {
        let g: Arc<dyn BoundaryFunction> = Arc::new(FnBoundary::new(1, None, 1.0, 1.0, |z| z[0]));
        let prob = TransportProblem::new(shear2(), g, bump(0.0, 0.1)).unwrap();
        let tr = prob.outflow_trace(&[0.1]).unwrap();
        assert!((tr(&[1.0, 0.2]).unwrap() - 0.3).abs() < 1e-15);
        let tr0 = prob.outflow_trace(&[0.0]).unwrap();
        assert_eq!(tr0(&[1.0, -0.25]).unwrap(), -0.25);
        assert!(tr(&[1.0, 0.8]).is_err());
    }

    #[test]
    fn far_parameters_give_zero_trace_on_the_support() {
        let prob = TransportProblem::new(shear2(), bump(0.3, 0.1), bump(0.0, 0.1)).unwrap();
        let tr = prob.outflow_trace(&[0.05]).unwrap();
        for k in 0..=100 {
            let z = -0.1 + 0.2 * k as f64 / 100.0;
            assert_eq!(tr(&[1.0, z]).unwrap(), 0.0);
        }
    }

    #[test]
    fn diagonal_value_matches_square_integral() {
        let field = shear2();
        let spec = FamilySpec {
            h: 0.1,
            s_minus: 1,
            s_plus: 1,
            p: Exponent::Finite(2.0),
            d_bar: 1,
            normalization: Normalization::Superposition,
        };
        let fam = build_family(&field, spec).unwrap();
        // brute-force oracle: midpoint rule on ψ_h² with 200k cells
        let n = 200_000;
        let mut sq = 0.0;
        for k in 0..n {
            let z = -0.1 + 0.2 * (k as f64 + 0.5) / n as f64;
            let v = crate::bumps::mollifier::psi(&[z / 0.1]);
            sq += v * v * 0.2 / n as f64;
        }
        let want = fam.product_scale() * sq;
        for i in 0..fam.len() {
            let prob = TransportProblem::new(field.clone(), Arc::new(fam.g_minus(i).clone()), Arc::new(fam.g_plus().clone()))
                .unwrap();
            let q = prob.qoi(&fam.params()[i]).unwrap();
            assert!((q - want).abs() < 1e-9 * want, "{q} vs {want}");
            for (j, mu) in fam.params().iter().enumerate() {
                if j != i {
                    assert!(prob.qoi(mu).unwrap().abs() <= 1e-12 * want);
                }
            }
        }
    }

    #[test]
    fn constants_are_transported_invariantly() {
        let plus = bump(0.1, 0.08);
        let total = TensorIntegral::of(&*plus);
        let prob = TransportProblem::new(shear2(), Arc::new(Constant { dim: 1, value: 1.0 }), plus).unwrap();
        for mu in [-0.5, -0.2, 0.0, 0.33, 0.5] {
            assert!((prob.qoi(&[mu]).unwrap() - total).abs() < 1e-12);
        }
    }

    struct TensorIntegral;
    impl TensorIntegral {
        fn of(f: &dyn BoundaryFunction) -> f64 {
            let s = f.support_box().unwrap();
            crate::quadrature::TensorRule::on_box(&s, 64, 8).integrate(|z| f.value(z))
        }
    }

    #[test]
    fn source_with_unit_density() {
        let plus = bump(0.0, 0.1);
        let c = TensorIntegral::of(&*plus);
        let prob = TransportProblem::new(shear2(), bump(0.2, 0.1), plus)
            .unwrap()
            .with_source(Arc::new(|_x: &[f64]| 1.0));
        for mu in [-0.4, 0.0, 0.2, 0.45] {
            let diff = prob.qoi_with_source(&[mu]).unwrap() - prob.qoi(&[mu]).unwrap();
            assert!((diff - c).abs() < 1e-12, "{diff} vs {c}");
        }
        let no_source = TransportProblem::new(shear2(), bump(0.2, 0.1), bump(0.0, 0.1)).unwrap();
        assert_eq!(no_source.qoi_with_source(&[0.2]).unwrap(), no_source.qoi(&[0.2]).unwrap());
    }

    #[test]
    fn shear_qoi_matches_convolution() {
        let gm = bump(0.15, 0.1);
        let gp = bump(0.0, 0.1);
        let prob = TransportProblem::new(shear2(), gm.clone(), gp.clone()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=40 {
            let mu = -0.5 + k as f64 / 40.0;
            let a = prob.qoi(&[mu]).unwrap();
            let b = convolution_reference(&*gm, &*gp, mu).unwrap();
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-10, "{worst}");
        assert_eq!(convolution_reference(&*gm, &*gp, 0.5).unwrap(), 0.0);
        let at0 = convolution_reference(&*gp, &*gp, 0.0).unwrap();
        assert!(at0 > 0.0);
    }

    #[test]
    fn riemann_examples() {
        for mu in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            assert!((riemann_recovery(mu).unwrap() - mu).abs() < 1e-12);
        }
        assert!(riemann_recovery(1.5).is_err());
    }

    #[test]
    fn curve_construction_and_distance() {
        let a = QoICurve::from_scalar_grid(&[0.0, 1.0], vec![1.0, 2.0], CurveMeta::labelled("a")).unwrap();
        let b = QoICurve::from_scalar_grid(&[0.0, 1.0], vec![1.5, 1.0], CurveMeta::labelled("b")).unwrap();
        assert_eq!(a.sup_distance(&b).unwrap(), 1.0);
        let c = QoICurve::from_scalar_grid(&[0.0, 2.0], vec![1.0, 2.0], CurveMeta::default()).unwrap();
        assert!(a.sup_distance(&c).is_err());
        assert!(QoICurve::from_scalar_grid(&[0.0], vec![f64::NAN], CurveMeta::default()).is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(TransportProblem::new(shear2(), bump(0.0, 0.1), bump(0.45, 0.1)).is_err());
        let two_d: Arc<dyn BoundaryFunction> = Arc::new(ScaledBump::new(vec![0.0, 0.0], 0.1, 1.0));
        assert!(TransportProblem::new(shear2(), two_d, bump(0.0, 0.1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn qoi_is_linear_in_the_inflow(a in -2.0f64..2.0, b in -2.0f64..2.0, mu in -0.5f64..=0.5, c in -0.3f64..0.3) {
            let g1 = bump(c, 0.1);
            let g2: Arc<dyn BoundaryFunction> = Arc::new(FnBoundary::new(1, None, 1.5, 0.2, |z| 1.0 + 0.5 * (3.0 * z[0]).sin()));
            let gp = bump(0.05, 0.1);
            let field = FlowField::new(ReferenceMap::curved(2, 0.15).unwrap(), 1).unwrap();
            let p1 = TransportProblem::new(field.clone(), g1.clone(), gp.clone()).unwrap();
            let p2 = p1.with_inflow(g2.clone()).unwrap();
            let mix = p1.with_inflow(Arc::new(LinearCombination::new(vec![(a, g1), (b, g2)]))).unwrap();
            let lhs = mix.qoi(&[mu]).unwrap();
            let rhs = a * p1.qoi(&[mu]).unwrap() + b * p2.qoi(&[mu]).unwrap();
            let scale = a.abs() * p1.qoi(&[mu]).unwrap().abs() + b.abs() * p2.qoi(&[mu]).unwrap().abs();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300) + 1e-18, "{} vs {}", lhs, rhs);
        }
    }
}
