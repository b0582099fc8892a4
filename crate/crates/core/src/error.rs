use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input {0}")]
    NonFinite(f64),

    /// Every weight of a batch underflowed to zero even in log space.
    #[error("degenerate batch: all {n} weights are zero")]
    DegenerateBatch { n: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("exact (normalized) weights required; got a self-normalized weight function")]
    NormalizerRequired,

    #[error("unsupported operation for target {0}")]
    Unsupported(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("time {t} is outside the path horizon [0, {end})")]
    OutsideHorizon { t: f64, end: f64 },

    #[error("replicate records disagree on sample size ({expected} vs {found})")]
    MixedSampleSize { expected: usize, found: usize },

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

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
