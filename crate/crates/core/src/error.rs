use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("covariance matrix is not invertible (eigenvalue ratio {ratio:e})")]
    NonInvertibleCovariance { ratio: f64 },

    #[error("moment of order {requested} exceeds the declared maximum {max}")]
    OrderExceeded { requested: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no Lebesgue lower bound found: density maximum {max_density:e} on the search grid")]
    NoLowerBoundFound { max_density: f64 },

    #[error("rejection sampler stalled: {accepted} accepted of {proposals} proposals")]
    RejectionStall { accepted: u64, proposals: u64 },

    #[error("Malliavin covariance is degenerate while the localizer is active")]
    DegenerateSigma,

    #[error("reconstructed mass {mass} deviates from expected {expected} (aliasing)")]
    AliasingDetected { mass: f64, expected: f64 },

    #[error("grids differ")]
    GridMismatch,

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

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

pub type Result<T> = std::result::Result<T, Error>;
