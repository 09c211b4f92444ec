//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse model file {path}: {message}")]
    Parse { path: String, message: String },

    #[error("model '{name}' rejected:\n{report}")]
    InvalidModel {
        name: String,
        report: crate::model::ValidationReport,
    },

    #[error("unknown gallery model '{0}'")]
    UnknownModel(String),

    #[error(
        "enumeration budget exceeded: {required} states per setting pair, cap is {cap}"
    )]
    BudgetExceeded { required: u128, cap: u128 },

    #[error("correlation table incomplete: {0}")]
    IncompleteTable(String),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
