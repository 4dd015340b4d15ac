//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum RiskError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("computation error: {0}")]
    Computation(String),
    /// Malformed input data (CSV rows, config files).
    #[error("input error: {0}")]
    Input(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, RiskError>;

impl RiskError {
    pub fn domain(msg: impl Into<String>) -> Self {
        RiskError::Domain(msg.into())
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        RiskError::Computation(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        RiskError::Input(msg.into())
    }

    /// Process exit code convention: 2 for domain/usage errors, 3 for
    /// computation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RiskError::Computation(_) => 3,
            _ => 2,
        }
    }
}
