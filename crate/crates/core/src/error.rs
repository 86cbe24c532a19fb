use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("degree {degree} exceeds the stability cap {cap} for d = {dim}")]
    DegreeOverflow {
        degree: usize,
        cap: usize,
        dim: usize,
    },

    #[error(
        "transform block at degree {degree} is not invertible (condition number {condition:e})"
    )]
    NotInvertible { degree: usize, condition: f64 },

    #[error("unsupported error model: {0}")]
    UnsupportedModel(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
