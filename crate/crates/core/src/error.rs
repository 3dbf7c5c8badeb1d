use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (probability outside its
    /// range, negative argument to a positive-domain function, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid procedure or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A malformed cell in an input dataset. Row and column are 1-based and
    /// refer to the data grid (after any skipped header row).
    #[error("data error at row {row}, column {column}: {message}")]
    Data {
        row: usize,
        column: usize,
        message: String,
    },

    /// I/O failure while reading or writing files.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
