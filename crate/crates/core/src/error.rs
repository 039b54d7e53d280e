use thiserror::Error;

/// Errors raised by decompositions, detectors, models and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MimoError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is rank deficient (diagonal entry {index} = {value:e} below threshold {threshold:e})")]
    RankDeficient { index: usize, value: f64, threshold: f64 },
    #[error("division by zero: {0}")]
    DivideByZero(String),
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("unsupported constellation order {0}")]
    UnsupportedOrder(usize),
    #[error("search space of {size} vectors exceeds the enumeration cap {cap}")]
    SearchSpaceTooLarge { size: f64, cap: u64 },
    #[error("error-pattern space too large for {0} layers")]
    PatternSpaceTooLarge(usize),
    #[error("invalid puncture pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl MimoError {
    /// True for errors caused by the numerical content of a channel draw
    /// rather than by the caller's configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MimoError::RankDeficient { .. }
                | MimoError::DivideByZero(_)
                | MimoError::NotPositiveDefinite(_)
        )
    }
}

impl From<std::io::Error> for MimoError {
    fn from(e: std::io::Error) -> Self {
        MimoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MimoError>;
