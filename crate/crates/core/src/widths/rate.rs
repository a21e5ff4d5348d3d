//! Power-law fits, finite-difference smoothness probes and piecewise
//! polynomial approximation errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares fit of `bound ≈ C n^{-α}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub samples: Vec<(f64, f64)>,
    /// Fitted `α̂`, minus the slope of `ln bound` against `ln n`.
    pub exponent: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub theory: Option<f64>,
}

impl RateFit {
    /// `|α̂ - α| / α`, if a theoretical exponent is known.
    pub fn relative_deviation(&self) -> Option<f64> {
        self.theory.map(|t| (self.exponent - t).abs() / t.abs())
    }
}

/// Fits `bound ~ n^{-α}` to at least three samples spanning a factor four in `n`.
pub fn rate_fit(samples: &[(f64, f64)], theory: Option<f64>) -> Result<RateFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidInput(format!("rate fit needs >= 3 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(n, b)| !(n > 0.0 && b > 0.0 && n.is_finite() && b.is_finite())) {
        return Err(Error::InvalidInput("rate fit needs positive finite samples".into()));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return Err(Error::InvalidInput(format!("samples span n in [{lo}, {hi}], less than a factor 4")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept) = least_squares_line(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(RateFit {
        samples: samples.to_vec(),
        exponent: -slope,
        residual,
        theory,
    })
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

/// Nested finite-difference steps.
pub const FD_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
const RICHARDSON_THRESHOLD: f64 = 0.1;

/// Outcome of [`smoothness_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessProbe {
    pub order: usize,
    /// `max |q^{(order)}|` over the probe points, from the finest Richardson pair.
    pub max_abs: f64,
    /// Per-step maxima of the raw central differences.
    pub raw_maxima: [f64; 3],
    /// Largest disagreement between the two Richardson values, relative to `max_abs`.
    pub richardson_gap: f64,
    pub consistent: bool,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central `order`-th difference quotient with step `h`.
fn central_difference(q: &dyn Fn(f64) -> Result<f64>, x: f64, order: usize, h: f64) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..=order {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let offset = (order as f64 / 2.0 - j as f64) * h;
        acc += sign * binomial(order, j) * q(x + offset)?;
    }
    Ok(acc / h.powi(order as i32))
}

/// Estimates `max |q^{(order)}|` over `points` with central differences on
/// [`FD_STEPS`] and Richardson extrapolation of the two step pairs.
pub fn smoothness_probe(q: &dyn Fn(f64) -> Result<f64>, points: &[f64], order: usize) -> Result<SmoothnessProbe> {
    if points.is_empty() || order == 0 {
        return Err(Error::InvalidInput("probe needs points and a positive order".into()));
    }
    let mut raw_maxima = [0.0f64; 3];
    let mut max_abs: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for &x in points {
        let d: Vec<f64> = FD_STEPS
            .iter()
            .map(|&h| central_difference(q, x, order, h))
            .collect::<Result<_>>()?;
        for k in 0..3 {
            raw_maxima[k] = raw_maxima[k].max(d[k].abs());
        }
        let r1 = (4.0 * d[1] - d[0]) / 3.0;
        let r2 = (4.0 * d[2] - d[1]) / 3.0;
        max_abs = max_abs.max(r2.abs());
        worst_gap = worst_gap.max((r1 - r2).abs());
    }
    let richardson_gap = if max_abs > 0.0 { worst_gap / max_abs } else { 0.0 };
    Ok(SmoothnessProbe {
        order,
        max_abs,
        raw_maxima,
        richardson_gap,
        consistent: richardson_gap <= RICHARDSON_THRESHOLD,
    })
}

fn legendre_row(s: f64, degree: usize) -> Vec<f64> {
    let mut row = vec![1.0; degree + 1];
    if degree >= 1 {
        row[1] = s;
    }
    for k in 2..=degree {
        let kf = k as f64;
        row[k] = ((2.0 * kf - 1.0) * s * row[k - 1] - (kf - 1.0) * row[k - 2]) / kf;
    }
    row
}

/// Sup-norm error of the least-squares piecewise polynomial of `degree` on
/// `pieces` uniform pieces of `[min x, max x]`, measured at the samples.
pub fn piecewise_poly_upper(xs: &[f64], ys: &[f64], degree: usize, pieces: usize) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() || pieces == 0 {
        return Err(Error::InvalidInput("need matching non-empty samples and at least one piece".into()));
    }
    let a = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (b - a) / pieces as f64;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); pieces];
    for (k, &x) in xs.iter().enumerate() {
        let p = if width > 0.0 { (((x - a) / width) as usize).min(pieces - 1) } else { 0 };
        buckets[p].push(k);
    }
    let mut worst: f64 = 0.0;
    for (p, idx) in buckets.iter().enumerate() {
        if idx.len() < degree + 1 {
            return Err(Error::InvalidInput(format!(
                "piece {p} has {} samples, fewer than {} coefficients",
                idx.len(),
                degree + 1
            )));
        }
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let local = |x: f64| if half > 0.0 { (x - mid) / half } else { 0.0 };
        let mut vander = DMatrix::zeros(idx.len(), degree + 1);
        let mut rhs = DVector::zeros(idx.len());
        for (r, &k) in idx.iter().enumerate() {
            for (c, v) in legendre_row(local(xs[k]), degree).into_iter().enumerate() {
                vander[(r, c)] = v;
            }
            rhs[r] = ys[k];
        }
        let coeffs = vander
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::LinearSystem(e.to_string()))?;
        let fitted = &vander * coeffs;
        for r in 0..idx.len() {
            worst = worst.max((fitted[r] - rhs[r]).abs());
        }
    }
    Ok(worst)
}
