use thiserror::Error;

/// Errors raised by validation and by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: String, found: String },

    #[error("map is not completely positive and trace preserving: {0}")]
    NotCptp(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension {dim} too large for {what} (limit {limit})")]
    DimTooLarge { what: String, dim: usize, limit: usize },

    #[error("tensor dimension {dim} exceeds cap {cap}")]
    DimCap { dim: usize, cap: usize },

    #[error("unknown family: {0}")]
    UnknownFamily(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("not a POVM effect: {0}")]
    NotEffect(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(expected: impl std::fmt::Display, found: impl std::fmt::Display) -> Self {
        Error::DimMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
