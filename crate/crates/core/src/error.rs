use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants line up with the CLI exit codes: `Domain` maps to 2,
/// `Resource`/`Truncation` to 3, everything input-shaped to 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("resource limit exceeded: {what} needs {size}, cap is {cap}")]
    Resource {
        what: &'static str,
        size: u64,
        cap: u64,
    },

    #[error("cell {cell} falls in row {row}, beyond the interleave truncation depth {depth}")]
    Truncation { cell: u64, row: u64, depth: u64 },

    #[error("cell index arithmetic overflowed while resolving cell {0}")]
    Overflow(u64),

    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
