//! TOML experiment configuration. One section per experiment kind; keys
//! without a default must be present.

use serde::{Deserialize, Serialize};
use widthlab::bumps::Exponent;
use widthlab::experiments as ex;
use widthlab::refdomain::MapKind;

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(rename = "fixed-b", default, skip_serializing_if = "Option::is_none")]
    pub fixed_b: Option<FixedB>,
    #[serde(rename = "variable-b", default, skip_serializing_if = "Option::is_none")]
    pub variable_b: Option<VariableB>,
    #[serde(rename = "upper-bound", default, skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<UpperBound>,
    #[serde(rename = "rhs-invariance", default, skip_serializing_if = "Option::is_none")]
    pub rhs_invariance: Option<RhsInvariance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convolution: Option<Convolution>,
    #[serde(rename = "rb-elliptic", default, skip_serializing_if = "Option::is_none")]
    pub rb_elliptic: Option<RbElliptic>,
    #[serde(rename = "svd-transport", default, skip_serializing_if = "Option::is_none")]
    pub svd_transport: Option<SvdTransport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riemann: Option<Riemann>,
}

/// Sobolev exponent: a number or `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    Number(f64),
    Text(String),
}

impl PValue {
    fn to_exponent(&self, key: &str) -> Result<Exponent, CliError> {
        match self {
            PValue::Number(p) => Exponent::from_f64(*p).map_err(|e| CliError::Config(format!("{key}: {e}"))),
            PValue::Text(t) if matches!(t.as_str(), "inf" | "infinity") => Ok(Exponent::Infinity),
            PValue::Text(t) => Err(CliError::Config(format!("{key}: expected a number or \"inf\", got \"{t}\""))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapName {
    Identity,
    Curved,
}

fn map_kind(map: MapName, curvature: Option<f64>, section: &str) -> Result<MapKind, CliError> {
    match (map, curvature) {
        (MapName::Identity, None) => Ok(MapKind::Identity),
        (MapName::Identity, Some(_)) => Err(CliError::Config(format!(
            "{section}.curvature: only valid with map = \"curved\""
        ))),
        (MapName::Curved, c) => Ok(MapKind::Curved {
            amplitude: c.unwrap_or(0.1),
        }),
    }
}

fn check_scales(section: &str, hs: &[f64]) -> Result<(), CliError> {
    if hs.is_empty() {
        return Err(CliError::Config(format!("{section}.hs: needs at least one scale")));
    }
    for &h in hs {
        if !(h > 0.0 && h <= 0.1 + 1e-12) {
            return Err(CliError::Config(format!("{section}.hs: scale {h} outside (0, 1/10]")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedB {
    pub d: usize,
    pub map: MapName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    pub s_minus: usize,
    pub s_plus: usize,
    pub s_b: usize,
    pub p: PValue,
    pub hs: Vec<f64>,
    pub grid_points: usize,
    #[serde(default = "default_rate_tolerance")]
    pub rate_tolerance: f64,
}

fn default_rate_tolerance() -> f64 {
    0.15
}

impl FixedB {
    pub fn resolve(&self) -> Result<ex::FixedBConfig, CliError> {
        if self.d < 2 {
            return Err(CliError::Config("fixed-b.d: must be at least 2".into()));
        }
        check_scales("fixed-b", &self.hs)?;
        Ok(ex::FixedBConfig {
            d: self.d,
            map: map_kind(self.map, self.curvature, "fixed-b")?,
            s_minus: self.s_minus,
            s_plus: self.s_plus,
            s_b: self.s_b,
            p: self.p.to_exponent("fixed-b.p")?,
            hs: self.hs.clone(),
            grid_points: self.grid_points,
            rate_tolerance: self.rate_tolerance,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableB {
    pub d: usize,
    /// Dimension `D` of the switch parameter.
    pub dim_hat: usize,
    pub map: MapName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    pub s_b: usize,
    pub s_minus: usize,
    pub s_plus: usize,
    pub p: PValue,
    pub h: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    256
}

impl VariableB {
    pub fn resolve(&self) -> Result<ex::VariableBConfig, CliError> {
        if self.d < 2 || self.dim_hat < 1 {
            return Err(CliError::Config("variable-b: needs d >= 2 and dim_hat >= 1".into()));
        }
        check_scales("variable-b", &[self.h])?;
        Ok(ex::VariableBConfig {
            d: self.d,
            dim_hat: self.dim_hat,
            map: map_kind(self.map, self.curvature, "variable-b")?,
            s_b: self.s_b,
            s_minus: self.s_minus,
            s_plus: self.s_plus,
            p: self.p.to_exponent("variable-b.p")?,
            h: self.h,
            cap: self.cap,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpperBound {
    pub s_minus: usize,
    pub s_plus: usize,
    pub p: PValue,
    pub hs: Vec<f64>,
    pub probe_points: usize,
    pub probe_halfwidth: f64,
    pub fit_h: f64,
    pub fit_samples: usize,
    pub pieces: Vec<usize>,
    pub degree: usize,
    #[serde(default = "default_bounded_growth")]
    pub max_bounded_growth: f64,
    #[serde(default = "default_ceiling_growth")]
    pub min_ceiling_growth: f64,
    #[serde(default = "default_min_rate")]
    pub min_rate: f64,
}

fn default_bounded_growth() -> f64 {
    2.0
}

fn default_ceiling_growth() -> f64 {
    1.5
}

fn default_min_rate() -> f64 {
    1.5
}

impl UpperBound {
    pub fn resolve(&self) -> Result<ex::UpperBoundConfig, CliError> {
        check_scales("upper-bound", &self.hs)?;
        check_scales("upper-bound.fit_h", &[self.fit_h])?;
        Ok(ex::UpperBoundConfig {
            s_minus: self.s_minus,
            s_plus: self.s_plus,
            p: self.p.to_exponent("upper-bound.p")?,
            hs: self.hs.clone(),
            probe_points: self.probe_points,
            probe_halfwidth: self.probe_halfwidth,
            max_bounded_growth: self.max_bounded_growth,
            min_ceiling_growth: self.min_ceiling_growth,
            fit_h: self.fit_h,
            fit_samples: self.fit_samples,
            pieces: self.pieces.clone(),
            degree: self.degree,
            min_rate: self.min_rate,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsInvariance {
    pub h: f64,
    pub grid_points: usize,
    #[serde(default = "default_rhs_tolerance")]
    pub tolerance: f64,
}

fn default_rhs_tolerance() -> f64 {
    1e-10
}

impl RhsInvariance {
    pub fn resolve(&self) -> Result<ex::RhsInvarianceConfig, CliError> {
        check_scales("rhs-invariance", &[self.h])?;
        Ok(ex::RhsInvarianceConfig {
            h: self.h,
            grid_points: self.grid_points,
            tolerance: self.tolerance,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Convolution {
    pub h: f64,
    pub inflow_center: f64,
    pub grid_points: usize,
    pub curvature: f64,
    pub rk4_steps: usize,
    pub order_steps: Vec<usize>,
    #[serde(default = "default_conv_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_conv_tolerance")]
    pub rk4_tolerance: f64,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

fn default_conv_tolerance() -> f64 {
    1e-8
}

fn default_min_order() -> f64 {
    3.5
}

impl Convolution {
    pub fn resolve(&self) -> Result<ex::ConvolutionConfig, CliError> {
        check_scales("convolution", &[self.h])?;
        if self.order_steps.len() < 2 {
            return Err(CliError::Config("convolution.order_steps: needs at least two step counts".into()));
        }
        Ok(ex::ConvolutionConfig {
            h: self.h,
            inflow_center: self.inflow_center,
            grid_points: self.grid_points,
            tolerance: self.tolerance,
            curvature: self.curvature,
            rk4_steps: self.rk4_steps,
            rk4_tolerance: self.rk4_tolerance,
            order_steps: self.order_steps.clone(),
            min_order: self.min_order,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbElliptic {
    pub n_elements: usize,
    pub training_points: usize,
    pub m_max: usize,
    pub test_points: usize,
    pub random_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_consistency")]
    pub consistency_tolerance: f64,
    #[serde(default = "default_decay_ratio")]
    pub min_decay_ratio: f64,
}

fn default_consistency() -> f64 {
    1e-12
}

fn default_decay_ratio() -> f64 {
    2.0
}

impl RbElliptic {
    pub fn resolve(&self) -> Result<ex::RbEllipticConfig, CliError> {
        Ok(ex::RbEllipticConfig {
            n_elements: self.n_elements,
            training_points: self.training_points,
            m_max: self.m_max,
            test_points: self.test_points,
            random_points: self.random_points,
            seed: self.seed.unwrap_or(ex::RbEllipticConfig::default().seed),
            consistency_tolerance: self.consistency_tolerance,
            min_decay_ratio: self.min_decay_ratio,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvdTransport {
    pub n_mu: usize,
    pub n_x: usize,
    pub fit_lo: usize,
    pub fit_hi: usize,
    #[serde(default = "default_exponent_range")]
    pub exponent_range: [f64; 2],
}

fn default_exponent_range() -> [f64; 2] {
    [-0.65, -0.35]
}

impl SvdTransport {
    pub fn resolve(&self) -> Result<ex::SvdTransportConfig, CliError> {
        Ok(ex::SvdTransportConfig {
            n_mu: self.n_mu,
            n_x: self.n_x,
            fit_lo: self.fit_lo,
            fit_hi: self.fit_hi,
            exponent_range: (self.exponent_range[0], self.exponent_range[1]),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Riemann {
    pub mus: Vec<f64>,
    #[serde(default = "default_riemann_tolerance")]
    pub tolerance: f64,
}

fn default_riemann_tolerance() -> f64 {
    1e-10
}

impl Riemann {
    pub fn resolve(&self) -> Result<ex::RiemannConfig, CliError> {
        Ok(ex::RiemannConfig {
            mus: self.mus.clone(),
            tolerance: self.tolerance,
        })
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn serialize(cfg: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))
}
