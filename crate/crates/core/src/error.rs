use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the analysis, synthesis and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported wavelet filter: {0} vanishing moments (supported: 1..=10)")]
    UnsupportedFilter(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient scales: {0}")]
    InsufficientScales(String),

    #[error("degenerate data at octave {octave}: {reason}")]
    DegenerateData { octave: usize, reason: String },

    #[error("singular regression: {0}")]
    SingularRegression(String),

    #[error("invalid finite-size correction: eta(p) = {0} must be positive")]
    InvalidCorrection(f64),

    #[error("invalid cumulant expansion: c2 = {0} must be negative")]
    InvalidExpansion(f64),

    #[error("no p with positive wavelet scaling function on the grid")]
    NoValidP,

    #[error("circulant embedding is not positive definite (min eigenvalue {0:e})")]
    EmbeddingFailure(f64),

    #[error("parameter inconsistency: {0}")]
    ParameterInconsistency(String),

    #[error("unsupported fractional order {0} (|nu| must be < 2)")]
    UnsupportedOrder(f64),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Coarse error class, used for process exit codes and FFI status codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::UnsupportedFilter(_)
            | Error::InvalidInput(_)
            | Error::InvalidParameter(_)
            | Error::ParameterInconsistency(_)
            | Error::UnsupportedOrder(_) => ErrorKind::Usage,
            Error::InsufficientData(_)
            | Error::InsufficientScales(_)
            | Error::DegenerateData { .. } => ErrorKind::Data,
            Error::SingularRegression(_)
            | Error::InvalidCorrection(_)
            | Error::InvalidExpansion(_)
            | Error::NoValidP
            | Error::EmbeddingFailure(_) => ErrorKind::Numerical,
            Error::Io { .. } | Error::Format { .. } => ErrorKind::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
    Io,
}

pub type Result<T> = std::result::Result<T, Error>;
