use thiserror::Error;

use crate::dyadic::DyadicInterval;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("exponent p = {0} out of range")]
    InvalidExponent(f64),
    #[error("interval (r = {r}, l = {l}) is not valid on a grid of level {level}")]
    IntervalOutOfRange { r: u32, l: u64, level: u32 },
    #[error("intervals {0:?} and {1:?} overlap")]
    Overlap(DyadicInterval, DyadicInterval),
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("weight is not strictly positive at cell {0}")]
    NonPositiveWeight(usize),
    #[error("threshold below root average (lambda = {lambda}, root average = {root_average})")]
    ThresholdBelowRootAverage { lambda: f64, root_average: f64 },
    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),
    #[error("slack must be at least 1, got {0}")]
    InvalidSlack(f64),
    #[error("level {level} outside [{min}, {max}]")]
    LevelOutOfRange { level: u32, min: u32, max: u32 },
    #[error("coefficient shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("wavelet index (j = {j}, k = {k}) outside the basis")]
    InvalidIndex { j: u32, k: u64 },
    #[error("f - h vanishes: the near-minimizer is already exact")]
    AlreadyOptimal,
    #[error("function is not supported inside {0:?}")]
    SupportViolation(DyadicInterval),
    #[error("function does not have mean zero (integral {integral}, L1 norm {l1})")]
    NonZeroMean { integral: f64, l1: f64 },
    #[error("weight center {0} coincides with a cell midpoint")]
    MidpointCollision(f64),
    #[error("radius list must be strictly increasing")]
    NotIncreasing,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
