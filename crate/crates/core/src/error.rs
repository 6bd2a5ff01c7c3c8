use thiserror::Error;

/// Errors raised by the numeric layer and the streaming API.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of a function or type.
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    /// A parameter failed validation.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An iterative routine hit its iteration cap without certifying its result.
    #[error("{routine} did not converge within {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },

    /// An intermediate quantity became NaN or infinite.
    #[error("non-finite intermediate in {0}")]
    NonFinite(&'static str),

    /// A query that needs at least one observation was made on an empty state.
    #[error("no observations")]
    NoObservations,

    /// Snapshot decoding failed.
    #[error("snapshot error: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
