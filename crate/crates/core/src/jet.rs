//! Truncated multivariate Taylor arithmetic.
//!
//! A jet stores the Taylor coefficients `c_α` of a function around a point
//! for every multi-index with `|α| ≤ order`, in graded order. Partial
//! derivatives are recovered as `D^α f = α! c_α`.

/// Multi-indices of `vars` variables with total degree at most `order`,
/// sorted by degree, then lexicographically descending in the first axis.
pub fn multi_indices(vars: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for degree in 0..=order {
        let mut current = vec![0; vars];
        push_degree(vars, degree, 0, &mut current, &mut out);
    }
    out
}

fn push_degree(vars: usize, remaining: usize, axis: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if vars == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if axis == vars - 1 {
        cur[axis] = remaining;
        out.push(cur.clone());
        cur[axis] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[axis] = k;
        push_degree(vars, remaining - k, axis + 1, cur, out);
    }
    cur[axis] = 0;
}

/// Index tables for jets of a fixed size.
#[derive(Clone, Debug)]
pub struct JetSpace {
    vars: usize,
    order: usize,
    indices: Vec<Vec<usize>>,
    degrees: Vec<usize>,
    // (left, right, product) index triples with |left| + |right| <= order
    products: Vec<(usize, usize, usize)>,
    factorials: Vec<f64>,
}

impl JetSpace {
    pub fn new(vars: usize, order: usize) -> Self {
        let indices = multi_indices(vars, order);
        let degrees: Vec<usize> = indices.iter().map(|a| a.iter().sum()).collect();
        let lookup = |alpha: &[usize]| indices.iter().position(|b| b.as_slice() == alpha);
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degrees[i] + degrees[j] > order {
                    continue;
                }
                let sum: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let k = lookup(&sum).expect("sum of admissible multi-indices is admissible");
                products.push((i, j, k));
            }
        }
        let factorials = indices
            .iter()
            .map(|a| a.iter().map(|&k| factorial(k)).product())
            .collect();
        Self {
            vars,
            order,
            indices,
            degrees,
            products,
            factorials,
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.degrees[idx]
    }

    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.vars {
            return None;
        }
        self.indices.iter().position(|b| b.as_slice() == alpha)
    }

    /// Number of multi-indices with degree at most `order`.
    pub fn prefix_len(&self, order: usize) -> usize {
        self.degrees.iter().take_while(|&&d| d <= order).count()
    }

    pub fn constant(&self, value: f64) -> Vec<f64> {
        let mut c = vec![0.0; self.len()];
        c[0] = value;
        c
    }

    /// The jet of `z_axis` expanded at `value`.
    pub fn variable(&self, axis: usize, value: f64) -> Vec<f64> {
        let mut c = self.constant(value);
        if self.order >= 1 {
            let mut unit = vec![0; self.vars];
            unit[axis] = 1;
            let k = self.index_of(&unit).expect("unit multi-index present");
            c[k] = 1.0;
        }
        c
    }

    pub fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for &(i, j, k) in &self.products {
            out[k] += a[i] * b[j];
        }
        out
    }

    /// Composes a univariate function with the jet `a`.
    ///
    /// `taylor[k]` must hold `g^{(k)}(a_0) / k!` for `k = 0..=order`.
    pub fn compose(&self, taylor: &[f64], a: &[f64]) -> Vec<f64> {
        debug_assert!(taylor.len() > self.order);
        let mut delta = a.to_vec();
        delta[0] = 0.0;
        let mut out = self.constant(taylor[self.order]);
        for k in (0..self.order).rev() {
            out = self.mul(&out, &delta);
            out[0] += taylor[k];
        }
        out
    }

    /// Converts Taylor coefficients into partial derivatives in place.
    pub fn to_derivatives(&self, coeffs: &mut [f64]) {
        for (c, f) in coeffs.iter_mut().zip(&self.factorials) {
            *c *= f;
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_ordering() {
        let idx = multi_indices(2, 2);
        assert_eq!(
            idx,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(multi_indices(0, 3), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn product_rule_on_polynomials() {
        // f = x^2 y at (1, 2): D_x f = 2xy = 4, D_xy f = 2x = 2, D_xx f = 2y = 4
        let s = JetSpace::new(2, 3);
        let x = s.variable(0, 1.0);
        let y = s.variable(1, 2.0);
        let mut f = s.mul(&s.mul(&x, &x), &y);
        s.to_derivatives(&mut f);
        assert_eq!(f[s.index_of(&[0, 0]).unwrap()], 2.0);
        assert_eq!(f[s.index_of(&[1, 0]).unwrap()], 4.0);
        assert_eq!(f[s.index_of(&[1, 1]).unwrap()], 2.0);
        assert_eq!(f[s.index_of(&[2, 0]).unwrap()], 4.0);
        assert_eq!(f[s.index_of(&[2, 1]).unwrap()], 2.0);
        assert_eq!(f[s.index_of(&[0, 3]).unwrap()], 0.0);
    }

    #[test]
    fn composition_with_exponential() {
        // d^k/dx^k exp(2x) at x = 0.3 equals 2^k exp(0.6)
        let s = JetSpace::new(1, 4);
        let x = s.variable(0, 0.3);
        let two_x: Vec<f64> = x.iter().map(|c| 2.0 * c).collect();
        let e = two_x[0].exp();
        let taylor: Vec<f64> = (0..=4).map(|k| e / factorial(k)).collect();
        let mut f = s.compose(&taylor, &two_x);
        s.to_derivatives(&mut f);
        for (k, v) in f.iter().enumerate() {
            let want = 2f64.powi(k as i32) * 0.6f64.exp();
            assert!((v - want).abs() < 1e-12 * want, "k={k}");
        }
    }
}
