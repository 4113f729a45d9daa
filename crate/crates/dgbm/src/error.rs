//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by training, prediction, scoring and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or hyper-parameter violates its documented bounds.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Inputs are structurally wrong (length mismatch, empty set, unordered grid, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Dataset-level problems: parse failures, missing columns, ragged rows.
    #[error("data error: {0}")]
    Data(String),

    /// Model file problems: schema mismatch, unknown head, malformed JSON.
    #[error("model file error: {0}")]
    Model(String),

    /// A numeric failure during boosting, naming the round and parameter index.
    #[error("numeric failure at round {round}, parameter {param}: {message}")]
    Numeric {
        round: usize,
        param: usize,
        message: String,
    },

    /// A non-finite value produced by a head, naming the raw parameter index.
    #[error("non-finite value for raw parameter {param}: {message}")]
    HeadNumeric { param: usize, message: String },

    /// A probability level or base-space value outside the attainable range of a
    /// bounded-image distribution head.
    #[error("value outside the attainable range ({lower}, {upper})")]
    OutOfSupport { lower: f64, upper: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }
}
