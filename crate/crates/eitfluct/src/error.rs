//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by parameter validation, the spectral evaluators and the
/// command-line front-end.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Both Rabi frequencies vanish, so no propagation coefficient exists.
    #[error("no driving field: the total Rabi frequency is zero")]
    NoDrivingField,

    /// The evaluation point sits on a pole of the (lossless) response.
    #[error("singularity: {0}")]
    Singularity(String),

    /// A closed-form evaluator was asked for a regime it does not cover.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// A parameter or table file could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// An internal consistency check (positivity, convergence, ...) failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
