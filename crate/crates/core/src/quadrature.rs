//! Gauss–Legendre rules, composite panels and tensor products.
//!
//! Every integral in the crate goes through these rules. Node sums use
//! Neumaier compensation so results do not depend on rounding order
//! beyond the fixed node order.

use crate::error::{Error, Result};

/// Compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let acc: NeumaierSum = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .collect();
        half * acc.total()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` with equal panels.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let base = GaussLegendre::new(order);
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            for (x, w) in base.nodes().iter().zip(base.weights()) {
                nodes.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let acc: NeumaierSum = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .collect();
        acc.total()
    }
}

/// Axis-aligned box given by per-axis closed intervals.
pub type BoxDomain = Vec<(f64, f64)>;

/// Tensor product of composite rules over a box.
#[derive(Clone, Debug)]
pub struct TensorRule {
    axes: Vec<CompositeRule>,
}

impl TensorRule {
    pub fn on_box(domain: &[(f64, f64)], panels: usize, order: usize) -> Self {
        let axes = domain
            .iter()
            .map(|&(a, b)| CompositeRule::new(a, b, panels, order))
            .collect();
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes().len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every node with its weight in a fixed lexicographic order.
    pub fn for_each(&self, mut visit: impl FnMut(&[f64], f64)) {
        let dim = self.axes.len();
        if dim == 0 {
            visit(&[], 1.0);
            return;
        }
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.nodes().len()).collect();
        let mut idx = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        loop {
            let mut weight = 1.0;
            for k in 0..dim {
                point[k] = self.axes[k].nodes()[idx[k]];
                weight *= self.axes[k].weights()[idx[k]];
            }
            visit(&point, weight);
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < sizes[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = NeumaierSum::new();
        self.for_each(|x, w| acc.add(w * f(x)));
        acc.total()
    }
}

/// Convergence target for refinement loops.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Tolerance {
    pub fn accepts(&self, coarse: f64, fine: f64) -> bool {
        (fine - coarse).abs() <= self.relative * fine.abs() + self.absolute
    }
}

/// Default Gauss–Legendre order used per panel.
pub const PANEL_ORDER: usize = 8;

/// Integrates over `domain` with panel doubling until two consecutive
/// levels agree to `tol`. Returns the finer estimate.
///
/// `panels` is the starting panel count per axis.
pub fn integrate_refined(
    domain: &[(f64, f64)],
    panels: usize,
    tol: Tolerance,
    max_refinements: usize,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let mut panels = panels.max(1);
    let mut previous = TensorRule::on_box(domain, panels, PANEL_ORDER).integrate(&f);
    for _ in 0..max_refinements {
        panels *= 2;
        let current = TensorRule::on_box(domain, panels, PANEL_ORDER).integrate(&f);
        if tol.accepts(previous, current) {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Quadrature(format!(
        "no agreement to rel {:.1e} / abs {:.1e} after {} refinements (last value {:e})",
        tol.relative, tol.absolute, max_refinements, previous
    )))
}

/// Panels per axis so that node spacing on an interval of `length` does not
/// exceed `spacing`.
pub fn panels_for_spacing(length: f64, spacing: f64) -> usize {
    let nodes = (length / spacing).ceil().max(1.0);
    (nodes / PANEL_ORDER as f64).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_weights_of_three_point_rule() {
        let rule = GaussLegendre::new(3);
        let r = (0.6f64).sqrt();
        assert!((rule.nodes()[0] + r).abs() < 1e-15);
        assert!(rule.nodes()[1].abs() < 1e-15);
        assert!((rule.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((rule.weights()[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 1..12 {
            let rule = GaussLegendre::new(n);
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
            let want = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-12 * want, "n={n}");
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 8, 16, 40] {
            let s: f64 = GaussLegendre::new(n).weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn tensor_rule_integrates_separable_function() {
        let rule = TensorRule::on_box(&[(0.0, 1.0), (0.0, 2.0)], 2, 6);
        assert_eq!(rule.len(), 144);
        let got = rule.integrate(|x| x[0].exp() * x[1].cos());
        let want = (1f64.exp() - 1.0) * 2f64.sin();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn refinement_reports_non_convergence() {
        let tol = Tolerance { relative: 1e-14, absolute: 0.0 };
        let res = integrate_refined(&[(-1.0, 1.0)], 1, tol, 1, |x| x[0].abs().sqrt());
        assert!(matches!(res, Err(Error::Quadrature(_))));
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let acc: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.total(), 2.0);
    }
}
