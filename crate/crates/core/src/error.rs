use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("a distribution needs at least two categories, got {0}")]
    TooFewCategories(usize),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid likelihood vector: {0}")]
    InvalidLikelihood(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for {n} categories")]
    Index { index: usize, n: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
