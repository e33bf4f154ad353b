use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state is not normalized: |norm² - 1| = {deviation:e}")]
    NotNormalized { deviation: f64 },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("matrix is not Hermitian: max |ρ - ρ†| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("wrong dimension: {0}")]
    WrongDimension(String),
    #[error("shot count must be at least 1")]
    InvalidShots,
    #[error("too few shots: {shots} < {min} required")]
    TooFewShots { shots: u64, min: u64 },
    #[error("shot schedule must be strictly increasing")]
    ScheduleNotIncreasing,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

impl Error {
    /// True for errors that indicate a numerical bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Consistency(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
