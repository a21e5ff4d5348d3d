//! One-dimensional affine elliptic problem `-(a_μ u')' = f` on `(0,1)` with
//! P1 finite elements, a strong-greedy reduced basis, and the offline/online
//! split of the reduced quantity of interest `ℓᵀ(Σ θ_q(μ) A_q)^{-1} f`.

mod svd;

pub use svd::{heaviside_snapshots, singular_values, snapshot_svd_decay, weighted_snapshot_matrix, SvdDecay};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, NeumaierSum};

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const ELEMENT_RULE: usize = 4;
const REFINEMENT_STEPS: usize = 2;
const DEPENDENCE_TOLERANCE: f64 = 1e-13;

/// Symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `xᵀ A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    fn add_scaled(&mut self, other: &Self, c: f64) {
        for (a, b) in self.diag.iter_mut().zip(&other.diag) {
            *a += c * b;
        }
        for (a, b) in self.off.iter_mut().zip(&other.off) {
            *a += c * b;
        }
    }

    /// Thomas algorithm; fails on a vanishing pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            }
            if pivot.abs() < f64::MIN_POSITIVE.sqrt() {
                return Err(Error::LinearSystem(format!("vanishing pivot at row {i}")));
            }
            c[i] = if i + 1 < n { self.off[i] / pivot } else { 0.0 };
            d[i] = if i == 0 {
                rhs[0] / pivot
            } else {
                (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot
            };
        }
        let mut x = d;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-(a_μ u')' = f` on `(0,1)`, `u(0) = u(1) = 0`, with
/// `a_μ = ā + Σ_q μ_q φ_q` and output `ℓ(u) = ∫ w u`.
#[derive(Clone)]
pub struct AffineEllipticProblem {
    n_elements: usize,
    a_bar: Coefficient,
    phis: Vec<Coefficient>,
    a_bar_matrix: Tridiagonal,
    a_q: Vec<Tridiagonal>,
    /// Per-element stiffness `∫_e c / h²`, index 0 for `ā`, `q + 1` for `φ_q`.
    element: Vec<Vec<f64>>,
    load: Vec<f64>,
    output: Vec<f64>,
    contrast: (f64, f64),
}

impl std::fmt::Debug for AffineEllipticProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AffineEllipticProblem")
            .field("n_elements", &self.n_elements)
            .field("q", &self.phis.len())
            .finish()
    }
}

impl AffineEllipticProblem {
    /// Requires `ā ∈ [2,3]` and `Σ|φ_q| ≤ 1`, checked at quadrature points.
    pub fn new(
        n_elements: usize,
        a_bar: Coefficient,
        phis: Vec<Coefficient>,
        f: Coefficient,
        output_weight: Coefficient,
    ) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::InvalidInput("need at least two elements".into()));
        }
        let rule = GaussLegendre::new(ELEMENT_RULE);
        let h = 1.0 / n_elements as f64;
        let n = n_elements - 1;
        let mut a_bar_matrix = Tridiagonal::zeros(n);
        let mut a_q = vec![Tridiagonal::zeros(n); phis.len()];
        let mut load = vec![0.0; n];
        let mut output = vec![0.0; n];
        let mut element = vec![Vec::with_capacity(n_elements); phis.len() + 1];
        let (mut gmin, mut gmax) = (f64::INFINITY, 0.0f64);
        for e in 0..n_elements {
            let x0 = e as f64 * h;
            let mut abar_int = 0.0;
            let mut phi_int = vec![0.0; phis.len()];
            // ∫ g φ_left, ∫ g φ_right for the load and output weights
            let mut lf = [0.0; 2];
            let mut lw = [0.0; 2];
            for (s, w) in rule.nodes().iter().zip(rule.weights()) {
                let t = 0.5 * (s + 1.0);
                let x = x0 + t * h;
                let wx = 0.5 * h * w;
                let ab = a_bar(x);
                let spread: f64 = phis.iter().map(|p| p(x).abs()).sum();
                if !(2.0..=3.0).contains(&ab) || spread > 1.0 + 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "coefficients violate ā ∈ [2,3], Σ|φ_q| ≤ 1 at x = {x}"
                    )));
                }
                gmin = gmin.min((ab - spread) / ab);
                gmax = gmax.max((ab + spread) / ab);
                abar_int += wx * ab;
                for (acc, p) in phi_int.iter_mut().zip(&phis) {
                    *acc += wx * p(x);
                }
                let (fx, ox) = (f(x), output_weight(x));
                lf[0] += wx * fx * (1.0 - t);
                lf[1] += wx * fx * t;
                lw[0] += wx * ox * (1.0 - t);
                lw[1] += wx * ox * t;
            }
            let scatter = |m: &mut Tridiagonal, value: f64| {
                let k = value / (h * h);
                // element e couples interior nodes e-1 and e
                if e >= 1 {
                    m.diag[e - 1] += k;
                }
                if e < n {
                    m.diag[e] += k;
                }
                if e >= 1 && e < n {
                    m.off[e - 1] -= k;
                }
            };
            element[0].push(abar_int / (h * h));
            for (q, v) in phi_int.iter().enumerate() {
                element[q + 1].push(v / (h * h));
            }
            scatter(&mut a_bar_matrix, abar_int);
            for (m, v) in a_q.iter_mut().zip(&phi_int) {
                scatter(m, *v);
            }
            if e >= 1 {
                load[e - 1] += lf[0];
                output[e - 1] += lw[0];
            }
            if e < n {
                load[e] += lf[1];
                output[e] += lw[1];
            }
        }
        Ok(Self {
            n_elements,
            a_bar,
            phis,
            a_bar_matrix,
            a_q,
            element,
            load,
            output,
            contrast: (gmin, gmax),
        })
    }

    /// `ā = 2.5`, `φ_1 = ½ sin(2πx)`, `f ≡ 1`, `ℓ` = mean over `(0,1)`.
    pub fn default_instance(n_elements: usize) -> Result<Self> {
        Self::new(
            n_elements,
            Arc::new(|_| 2.5),
            vec![Arc::new(|x: f64| 0.5 * (2.0 * std::f64::consts::PI * x).sin())],
            Arc::new(|_| 1.0),
            Arc::new(|_| 1.0),
        )
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Number of interior nodes.
    pub fn n_dofs(&self) -> usize {
        self.n_elements - 1
    }

    pub fn q(&self) -> usize {
        self.phis.len()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..self.n_elements).map(|i| i as f64 / self.n_elements as f64).collect()
    }

    pub fn a_bar(&self) -> &Coefficient {
        &self.a_bar
    }

    pub fn a_bar_matrix(&self) -> &Tridiagonal {
        &self.a_bar_matrix
    }

    pub fn a_q_matrix(&self, q: usize) -> &Tridiagonal {
        &self.a_q[q]
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    fn check_parameter(&self, mu: &[f64]) -> Result<()> {
        if mu.len() != self.q() {
            return Err(Error::InvalidInput(format!("μ has length {}, expected {}", mu.len(), self.q())));
        }
        if mu.iter().any(|m| !m.is_finite() || m.abs() > 1.0 + 1e-12) {
            return Err(Error::Domain(format!("μ = {mu:?} outside [-1,1]^{}", self.q())));
        }
        Ok(())
    }

    /// Stiffness matrix at `μ`.
    pub fn assemble(&self, mu: &[f64]) -> Result<Tridiagonal> {
        self.check_parameter(mu)?;
        let mut a = self.a_bar_matrix.clone();
        for (m, &c) in self.a_q.iter().zip(mu) {
            a.add_scaled(m, c);
        }
        Ok(a)
    }

    /// Finite element solution at the interior nodes.
    pub fn hifi_solve(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let a = self.assemble(mu)?;
        let k = self.element_stiffness(mu);
        let mut u = a.solve(&self.load)?;
        for _ in 0..REFINEMENT_STEPS {
            let d = a.solve(&self.residual(&k, &u))?;
            for (x, dx) in u.iter_mut().zip(&d) {
                *x += dx;
            }
        }
        let residual = self.residual(&k, &u).iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let scale = 4.0 * a.max_abs() * u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            + self.load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual > 1e-12 * scale {
            return Err(Error::LinearSystem(format!("relative residual {:e}", residual / scale)));
        }
        Ok(u)
    }

    /// `ℓ(u)`.
    pub fn qoi(&self, u: &[f64]) -> f64 {
        dot(&self.output, u)
    }

    /// Energy inner product at `μ = 0`.
    pub fn energy_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        element_form(&self.element[0], u, v)
    }

    /// `f - A u` from element fluxes `k_e (u_e - u_{e-1})`, so the rounding
    /// of assembled entries does not enter.
    fn residual(&self, k: &[f64], u: &[f64]) -> Vec<f64> {
        let flux: Vec<f64> = k.iter().zip(gradients(u)).map(|(k, g)| k * g).collect();
        (0..u.len())
            .map(|i| {
                let mut acc = NeumaierSum::new();
                acc.add(self.load[i]);
                acc.add(-flux[i]);
                acc.add(flux[i + 1]);
                acc.total()
            })
            .collect()
    }

    /// Per-element stiffness of `a_μ`.
    fn element_stiffness(&self, mu: &[f64]) -> Vec<f64> {
        let mut k = self.element[0].clone();
        for (kq, &c) in self.element[1..].iter().zip(mu) {
            for (a, b) in k.iter_mut().zip(kq) {
                *a += c * b;
            }
        }
        k
    }

    pub fn energy_norm(&self, u: &[f64]) -> f64 {
        self.energy_inner(u, u).max(0.0).sqrt()
    }

    /// `√(C/c)` with `c ≤ a_μ/ā ≤ C` over the parameter box.
    pub fn cea_constant(&self) -> f64 {
        (self.contrast.1 / self.contrast.0).sqrt()
    }
}

/// Reduced basis from the strong greedy algorithm.
#[derive(Clone, Debug)]
pub struct GreedyBasis {
    /// Energy-orthonormal basis vectors (at `μ = 0`).
    pub vectors: Vec<Vec<f64>>,
    /// Training indices in selection order.
    pub selected: Vec<usize>,
    /// `max_j ‖u_j - P_k u_j‖` before each addition, plus the final value.
    pub errors: Vec<f64>,
}

impl GreedyBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The first `m` vectors.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.len());
        Self {
            vectors: self.vectors[..m].to_vec(),
            selected: self.selected[..m].to_vec(),
            errors: self.errors[..=m].to_vec(),
        }
    }
}

/// Strong greedy over `training` in the `μ = 0` energy norm with true
/// projection errors. Stops early once the largest relative residual drops
/// below `1e-13`.
pub fn greedy_basis(prob: &AffineEllipticProblem, training: &[Vec<f64>], m: usize) -> Result<GreedyBasis> {
    if training.len() < m || m == 0 {
        return Err(Error::InvalidInput(format!(
            "need 1 <= m <= training size, got m = {m} and {} training points",
            training.len()
        )));
    }
    let snapshots = training
        .par_iter()
        .map(|mu| prob.hifi_solve(mu))
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = snapshots.iter().map(|u| prob.energy_norm(u)).collect();
    let reference = norms.iter().cloned().fold(0.0, f64::max);
    let mut residuals = snapshots.clone();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut selected = Vec::new();
    let mut errors = Vec::new();
    loop {
        let errs: Vec<f64> = residuals.iter().map(|r| prob.energy_norm(r)).collect();
        let (best, err) = errs
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, &e)| if e > be { (i, e) } else { (bi, be) });
        errors.push(err);
        if vectors.len() == m || err <= DEPENDENCE_TOLERANCE * reference {
            break;
        }
        let mut v = residuals[best].clone();
        for b in &vectors {
            let c = prob.energy_inner(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let nv = prob.energy_norm(&v);
        if nv <= DEPENDENCE_TOLERANCE * reference {
            break;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }
        for r in residuals.iter_mut() {
            let c = prob.energy_inner(r, &v);
            for (x, y) in r.iter_mut().zip(&v) {
                *x -= c * y;
            }
        }
        vectors.push(v);
        selected.push(best);
    }
    Ok(GreedyBasis {
        vectors,
        selected,
        errors,
    })
}

/// Reduced operators stored by the offline phase, as one flat vector laid
/// out as `A_0, A_1, …, A_Q` (row-major `m × m` each), then `f`, then `ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineData {
    m: usize,
    q: usize,
    values: Vec<f64>,
}

impl OnlineData {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of stored reals, `(Q+1)m² + 2m`.
    pub fn n_store(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `A_0` for `k = 0`, `A_k` for `k = 1..=Q`.
    pub fn matrix(&self, k: usize) -> DMatrix<f64> {
        let m = self.m;
        DMatrix::from_row_slice(m, m, &self.values[k * m * m..(k + 1) * m * m])
    }

    pub fn load(&self) -> &[f64] {
        let start = (self.q + 1) * self.m * self.m;
        &self.values[start..start + self.m]
    }

    pub fn output(&self) -> &[f64] {
        let start = (self.q + 1) * self.m * self.m + self.m;
        &self.values[start..start + self.m]
    }
}

/// Nodal differences including the homogeneous boundary values.
fn gradients(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..=n)
        .map(|e| {
            let right = if e < n { u[e] } else { 0.0 };
            let left = if e > 0 { u[e - 1] } else { 0.0 };
            right - left
        })
        .collect()
}

/// `Σ_e k_e (u_e - u_{e-1})(v_e - v_{e-1})`, free of the cancellation in
/// the assembled second differences.
fn element_form(k: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let (gu, gv) = (gradients(u), gradients(v));
    let mut acc = NeumaierSum::new();
    for ((k, a), b) in k.iter().zip(&gu).zip(&gv) {
        acc.add(k * a * b);
    }
    acc.total()
}

fn project(k: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let grads: Vec<Vec<f64>> = basis.iter().map(|b| gradients(b)).collect();
    let mut out = Vec::with_capacity(basis.len() * basis.len());
    for gi in &grads {
        for gj in &grads {
            let mut acc = NeumaierSum::new();
            for ((k, a), b) in k.iter().zip(gi).zip(gj) {
                acc.add(k * a * b);
            }
            out.push(acc.total());
        }
    }
    out
}

/// Projects the affine operators, load and output onto the basis.
pub fn offline(prob: &AffineEllipticProblem, basis: &GreedyBasis) -> OnlineData {
    let v = &basis.vectors;
    let mut values = Vec::new();
    for k in &prob.element {
        values.extend(project(k, v));
    }
    values.extend(v.iter().map(|b| dot(b, prob.load())));
    values.extend(v.iter().map(|b| dot(b, prob.output())));
    OnlineData {
        m: v.len(),
        q: prob.q(),
        values,
    }
}

/// `ℓᵀ (A_0 + Σ μ_q A_q)^{-1} f` by Cholesky factorization.
pub fn online(data: &OnlineData, mu: &[f64]) -> Result<f64> {
    if mu.len() != data.q {
        return Err(Error::InvalidInput(format!("μ has length {}, expected {}", mu.len(), data.q)));
    }
    let mut a = data.matrix(0);
    for (k, &c) in mu.iter().enumerate() {
        a += data.matrix(k + 1) * c;
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::LinearSystem(format!("reduced matrix at μ = {mu:?} is not positive definite")))?;
    let c = chol.solve(&DVector::from_column_slice(data.load()));
    Ok(dot(data.output(), c.as_slice()))
}

/// Galerkin solution in `span(basis)` from the assembled `A(μ)`, bypassing
/// the affine decomposition.
#[derive(Clone, Debug)]
pub struct SpanSolution {
    pub coefficients: Vec<f64>,
    pub qoi: f64,
}

impl SpanSolution {
    pub fn expand(&self, basis: &GreedyBasis) -> Vec<f64> {
        let n = basis.vectors.first().map_or(0, |v| v.len());
        let mut u = vec![0.0; n];
        for (c, b) in self.coefficients.iter().zip(&basis.vectors) {
            for (x, y) in u.iter_mut().zip(b) {
                *x += c * y;
            }
        }
        u
    }
}

pub fn galerkin_in_span(prob: &AffineEllipticProblem, basis: &GreedyBasis, mu: &[f64]) -> Result<SpanSolution> {
    prob.check_parameter(mu)?;
    let m = basis.len();
    let reduced = DMatrix::from_row_slice(m, m, &project(&prob.element_stiffness(mu), &basis.vectors));
    let rhs = DVector::from_iterator(m, basis.vectors.iter().map(|b| dot(b, prob.load())));
    let c = reduced
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearSystem("singular reduced matrix".into()))?;
    let out: Vec<f64> = basis.vectors.iter().map(|b| dot(b, prob.output())).collect();
    Ok(SpanSolution {
        qoi: dot(&out, c.as_slice()),
        coefficients: c.as_slice().to_vec(),
    })
}

/// `n` equispaced points of `[-1, 1]`.
pub fn uniform_training(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![0.0]];
    }
    (0..n).map(|k| vec![-1.0 + 2.0 * k as f64 / (n - 1) as f64]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(n: usize) -> AffineEllipticProblem {
        AffineEllipticProblem::new(n, Arc::new(|_| 2.0), vec![], Arc::new(|_| 1.0), Arc::new(|_| 1.0)).unwrap()
    }

    #[test]
    fn constant_coefficient_solution_is_exact_at_nodes() {
        // -(2u')' = 1 gives u = x(1-x)/4; P1 is nodally exact in 1D
        let p = plain(64);
        let u = p.hifi_solve(&[]).unwrap();
        for (x, v) in p.nodes().iter().zip(&u) {
            assert!((v - x * (1.0 - x) / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn origin_and_symmetry() {
        let p = AffineEllipticProblem::new(
            128,
            Arc::new(|_| 2.5),
            vec![Arc::new(|x: f64| 0.5 * (2.0 * std::f64::consts::PI * x).cos())],
            Arc::new(|_| 1.0),
            Arc::new(|_| 1.0),
        )
        .unwrap();
        let u = p.hifi_solve(&[0.7]).unwrap();
        let n = u.len();
        for i in 0..n {
            assert!((u[i] - u[n - 1 - i]).abs() < 1e-12);
        }
        let d = AffineEllipticProblem::default_instance(128).unwrap();
        let abar = AffineEllipticProblem::new(128, Arc::new(|_| 2.5), vec![], Arc::new(|_| 1.0), Arc::new(|_| 1.0))
            .unwrap();
        assert_eq!(d.hifi_solve(&[0.0]).unwrap(), abar.hifi_solve(&[]).unwrap());
    }

    #[test]
    fn rejects_non_elliptic_coefficients() {
        let bad = AffineEllipticProblem::new(16, Arc::new(|_| 1.5), vec![], Arc::new(|_| 1.0), Arc::new(|_| 1.0));
        assert!(bad.is_err());
        let bad = AffineEllipticProblem::new(
            16,
            Arc::new(|_| 2.5),
            vec![Arc::new(|_| 0.7), Arc::new(|_| 0.5)],
            Arc::new(|_| 1.0),
            Arc::new(|_| 1.0),
        );
        assert!(bad.is_err());
        let d = AffineEllipticProblem::default_instance(16).unwrap();
        assert!(d.hifi_solve(&[1.5]).is_err());
    }

    #[test]
    fn first_greedy_vector_is_largest_snapshot() {
        let p = AffineEllipticProblem::default_instance(64).unwrap();
        let train = uniform_training(9);
        let b = greedy_basis(&p, &train, 1).unwrap();
        let norms: Vec<f64> = train.iter().map(|mu| p.energy_norm(&p.hifi_solve(mu).unwrap())).collect();
        let argmax = (0..9).fold(0, |bi, i| if norms[i] > norms[bi] { i } else { bi });
        assert_eq!(b.selected, vec![argmax]);
        assert!((p.energy_norm(&b.vectors[0]) - 1.0).abs() < 1e-14);
        assert!((b.errors[0] - norms[argmax]).abs() < 1e-14 * norms[argmax]);
    }

    #[test]
    fn identical_snapshots_stop_after_one_vector() {
        let p = AffineEllipticProblem::default_instance(64).unwrap();
        let b = greedy_basis(&p, &vec![vec![0.3]; 5], 4).unwrap();
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn offline_examples() {
        let p = AffineEllipticProblem::new(64, Arc::new(|_| 2.5), vec![], Arc::new(|_| 1.0), Arc::new(|_| 1.0)).unwrap();
        let b = greedy_basis(&p, &[vec![]], 1).unwrap();
        let data = offline(&p, &b);
        assert!((data.matrix(0)[(0, 0)] - 1.0).abs() < 1e-14);
        assert_eq!(data.n_store(), 1 + 2);
        let q0 = online(&data, &[]).unwrap();
        assert!((q0 - p.qoi(&p.hifi_solve(&[]).unwrap())).abs() < 1e-14);

        let d = AffineEllipticProblem::default_instance(64).unwrap();
        let basis = greedy_basis(&d, &uniform_training(16), 4).unwrap();
        let data = offline(&d, &basis);
        assert_eq!(data.n_store(), 2 * 16 + 2 * 4);
        for k in 0..=1 {
            let a = data.matrix(k);
            assert!((a.clone() - a.transpose()).amax() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_space_is_rational_in_mu() {
        let d = AffineEllipticProblem::default_instance(64).unwrap();
        let basis = greedy_basis(&d, &uniform_training(16), 1).unwrap();
        let data = offline(&d, &basis);
        let (a0, a1) = (data.matrix(0)[(0, 0)], data.matrix(1)[(0, 0)]);
        let (f1, l1) = (data.load()[0], data.output()[0]);
        for mu in [-1.0, -0.4, 0.0, 0.55, 1.0] {
            let want = l1 * f1 / (a0 + mu * a1);
            assert!((online(&data, &[mu]).unwrap() - want).abs() < 1e-14 * want.abs().max(1.0));
        }
    }

    #[test]
    fn full_basis_reproduces_truth() {
        let d = AffineEllipticProblem::default_instance(12).unwrap();
        let basis = greedy_basis(&d, &uniform_training(40), 11).unwrap();
        assert!(basis.len() <= 11);
        let data = offline(&d, &basis);
        for mu in [-0.9, 0.1, 0.8] {
            let truth = d.qoi(&d.hifi_solve(&[mu]).unwrap());
            assert!((online(&data, &[mu]).unwrap() - truth).abs() < 1e-10);
        }
    }

    #[test]
    fn parameter_free_online_is_constant() {
        let p = plain(32);
        let b = greedy_basis(&p, &[vec![]], 1).unwrap();
        let data = offline(&p, &b);
        assert_eq!(online(&data, &[]).unwrap(), online(&data, &[]).unwrap());
        assert!(online(&data, &[0.1]).is_err());
    }
}
