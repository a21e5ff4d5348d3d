//! Flow fields `b_μ = (∂_t Ξ_μ) ∘ Ξ_μ^{-1}`, characteristics and the
//! inflow/outflow maps.

use nalgebra::DVector;

use super::{check_half_box, in_omega, ReferenceMap, SwitchFunction, BOX_SLACK};
use crate::error::{Error, Result};

/// Distance to the outflow face below which the tracer snaps onto it.
pub const TRACE_FACE_TOLERANCE: f64 = 1e-13;

// Points farther than this outside Ω end a trace with an error.
const TRACE_ESCAPE: f64 = 1e-9;

/// Parametric flow field on `Ω`, optionally with a switched last parameter.
#[derive(Clone, Debug)]
pub struct FlowField {
    reference: ReferenceMap,
    s_b: usize,
    switch: Option<SwitchFunction>,
}

impl FlowField {
    /// Fixed-flow mode with parameters `μ ∈ ½[-1,1]^{d-1}`.
    pub fn new(reference: ReferenceMap, s_b: usize) -> Result<Self> {
        if s_b == 0 {
            return Err(Error::InvalidInput("flow smoothness s_b must be positive".into()));
        }
        Ok(Self {
            reference,
            s_b,
            switch: None,
        })
    }

    /// Switched mode with parameters `(μ̄, μ̂)`, `μ̄ ∈ ½[-1,1]^{d-2}`,
    /// `μ̂ ∈ [-1,1]^D`; the base flow is evaluated at `(μ̄, ϑ(μ̂))`.
    pub fn switched(reference: ReferenceMap, switch: SwitchFunction) -> Result<Self> {
        if 5.0 * switch.h() > 0.5 + BOX_SLACK {
            return Err(Error::InvalidInput("switch height 5h exceeds 1/2".into()));
        }
        Ok(Self {
            s_b: switch.s_b(),
            reference,
            switch: Some(switch),
        })
    }

    pub fn reference(&self) -> &ReferenceMap {
        &self.reference
    }

    pub fn s_b(&self) -> usize {
        self.s_b
    }

    pub fn switch(&self) -> Option<&SwitchFunction> {
        self.switch.as_ref()
    }

    /// Length of the parameter vector accepted by this field.
    pub fn param_dim(&self) -> usize {
        let m = self.reference.face_dim();
        match &self.switch {
            None => m,
            Some(s) => m - 1 + s.dim(),
        }
    }

    /// Parameter of the underlying fixed flow.
    pub fn base_parameter(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let m = self.reference.face_dim();
        match &self.switch {
            None => {
                check_half_box("μ", mu, m)?;
                Ok(mu.to_vec())
            }
            Some(s) => {
                if mu.len() != self.param_dim() {
                    return Err(Error::InvalidInput(format!(
                        "parameter has length {}, expected {}",
                        mu.len(),
                        self.param_dim()
                    )));
                }
                let (bar, hat) = mu.split_at(m - 1);
                check_half_box("μ̄", bar, m - 1)?;
                let mut base = bar.to_vec();
                base.push(s.value(hat)?);
                Ok(base)
            }
        }
    }

    fn base_velocity(&self, base: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let (t, v) = self.reference.inverse(x)?;
        let t = t.clamp(0.0, 1.0);
        let v: Vec<f64> = v.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        let mut b = self.reference.dt(t, &v);
        let shear = self.reference.dw(t, &v) * DVector::from_column_slice(base);
        for (bk, s) in b[1..].iter_mut().zip(shear.iter()) {
            *bk -= s;
        }
        Ok(b)
    }

    /// `b_μ(x)`; points outside `Ω` are rejected.
    pub fn velocity(&self, mu: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let base = self.base_parameter(mu)?;
        self.base_velocity(&base, x)
    }

    /// `b^ϑ_{μ̄,μ̂}(x) = b_{μ̄,ϑ(μ̂)}(x)`.
    pub fn switched_velocity(&self, mu_bar: &[f64], mu_hat: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        if self.switch.is_none() {
            return Err(Error::InvalidInput("flow field has no switch".into()));
        }
        let mu: Vec<f64> = mu_bar.iter().chain(mu_hat).copied().collect();
        self.velocity(&mu, x)
    }

    fn inflow_coordinate(&self, base: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let d = self.reference.dim();
        if x.len() != d || x[0].abs() > BOX_SLACK {
            return Err(Error::Domain(format!("{x:?} is not on the inflow face")));
        }
        let (_, w) = self.reference.xi_mu_inverse(base, x)?;
        check_half_box("inflow patch coordinate", &w, d - 1)?;
        Ok(w)
    }

    fn outflow_coordinate(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.reference.dim();
        if y.len() != d || (y[0] - 1.0).abs() > BOX_SLACK {
            return Err(Error::Domain(format!("{y:?} is not on the outflow face")));
        }
        let (_, w) = self.reference.inverse(y)?;
        check_half_box("outflow patch coordinate", &w, d - 1)?;
        Ok(w)
    }

    /// `F_μ`: inflow point to the outflow point on the same characteristic.
    pub fn forward_map(&self, mu: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let base = self.base_parameter(mu)?;
        let w = self.inflow_coordinate(&base, x)?;
        Ok(self.reference.eval_unchecked(1.0, &w))
    }

    /// `B_μ = F_μ^{-1}`.
    pub fn backward_map(&self, mu: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let base = self.base_parameter(mu)?;
        self.backward_map_base(&base, y)
    }

    /// [`Self::backward_map`] for an already validated base parameter.
    pub(crate) fn backward_map_base(&self, base: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let w = self.outflow_coordinate(y)?;
        self.reference.xi_mu(base, 0.0, &w)
    }

    /// `X_μ(t; B_μ y)` for an outflow point `y` and a validated base parameter.
    pub(crate) fn characteristic_through_outflow(&self, base: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
        let w = self.outflow_coordinate(y)?;
        self.reference.xi_mu(base, t, &w)
    }

    /// `X_μ(t; x0)` in closed form; transit time from inflow to outflow is 1.
    pub fn characteristic(&self, mu: &[f64], x0: &[f64], t: f64) -> Result<Vec<f64>> {
        let base = self.base_parameter(mu)?;
        let w = self.inflow_coordinate(&base, x0)?;
        self.reference.xi_mu(&base, t, &w)
    }

    /// Integrates `dX/dt = b_μ(X)` from `x0` with classical RK4 and `steps`
    /// steps per unit time, ending exactly on the outflow face.
    pub fn trace_characteristic(&self, mu: &[f64], x0: &[f64], steps: usize) -> Result<Vec<f64>> {
        if steps == 0 {
            return Err(Error::InvalidInput("steps must be >= 1".into()));
        }
        let base = self.base_parameter(mu)?;
        self.inflow_coordinate(&base, x0)?;
        let dt = 1.0 / steps as f64;
        let rhs = |x: &[f64]| -> Result<Vec<f64>> {
            let clamped: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(k, v)| if k == 0 { v.clamp(0.0, 1.0) } else { v.clamp(-1.0, 1.0) })
                .collect();
            self.base_velocity(&base, &clamped)
        };
        let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(u, v)| u + a * v).collect() };
        let mut x = x0.to_vec();
        let limit = 4 * steps + 16;
        for _ in 0..limit {
            let remaining = 1.0 - x[0];
            if remaining <= TRACE_FACE_TOLERANCE {
                x[0] = 1.0;
                return Ok(x);
            }
            let k1 = rhs(&x)?;
            if k1[0] <= 0.0 {
                return Err(Error::Integration(format!("flow does not advance towards the outflow at {x:?}")));
            }
            let h = if x[0] + dt * k1[0] >= 1.0 - TRACE_FACE_TOLERANCE {
                remaining / k1[0]
            } else {
                dt
            };
            let k2 = rhs(&axpy(&x, 0.5 * h, &k1))?;
            let k3 = rhs(&axpy(&x, 0.5 * h, &k2))?;
            let k4 = rhs(&axpy(&x, h, &k3))?;
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if x[0] < -TRACE_ESCAPE || x[1..].iter().any(|v| v.abs() > 1.0 + TRACE_ESCAPE) {
                return Err(Error::Integration(format!("characteristic left Ω at {x:?}")));
            }
        }
        if in_omega(&x) && (1.0 - x[0]).abs() <= TRACE_FACE_TOLERANCE {
            x[0] = 1.0;
            return Ok(x);
        }
        Err(Error::Integration(format!(
            "characteristic did not reach the outflow face within {limit} steps"
        )))
    }
}
