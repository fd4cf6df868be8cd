use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("every predictor has infinite risk")]
    AllRisksInfinite,
    #[error("comparator has infinite risk")]
    InfiniteComparator,
    #[error("normalizer is zero: {0}")]
    ZeroNormalizer(String),
    #[error("optimizer did not converge after {iterations} iterations (gap {gap:e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        best: Vec<f64>,
    },
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("product space of {states} states exceeds the enumeration cap {cap}")]
    CapExceeded { states: f64, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
