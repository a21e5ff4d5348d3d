//! Numerical laboratory for reduced order models of parametric transport.
//!
//! The crate builds reference-domain flow fields and their characteristics
//! ([`refdomain`]), adversarial bump families ([`bumps`]), exact
//! characteristic quantities of interest ([`transport`]), packing and
//! covering estimates of metric entropy ([`widths`]), and an elliptic
//! reduced-basis baseline ([`rbelliptic`]). [`experiments`] combines them
//! into the end-to-end runs used by the command line harness.

pub mod boundary;
pub mod bumps;
pub mod error;
pub mod experiments;
pub mod jet;
pub mod quadrature;
pub mod rbelliptic;
pub mod refdomain;
pub mod transport;
pub mod widths;

pub use error::{Error, Result};
