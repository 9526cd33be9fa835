use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the sampling, estimation and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain an operation is defined on.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A run spent more precision than its budget allows.
    #[error("precision budget exceeded: spent {spent} of {total}")]
    BudgetExceeded { spent: f64, total: f64 },

    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_parameter(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Config { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
