use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the region where an operation is defined.
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("characteristic integration failed: {0}")]
    Integration(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("certificate refused for pair ({first}, {second}): {reason}")]
    CertificateRefused {
        first: usize,
        second: usize,
        reason: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear system failure: {0}")]
    LinearSystem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
