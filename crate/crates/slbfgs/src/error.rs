use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("grid size must be at least 1")]
    EmptyGrid,
    #[error("curvature y's = {0} is not positive")]
    NonPositiveCurvature(f64),
    #[error("step vector s must be nonzero")]
    ZeroStep,
    #[error("rho = y's is zero; BB factors undefined")]
    ZeroRho,
    #[error("invalid interval: tau_min = {0} > tau_max = {1}")]
    InvalidInterval(f64, f64),
    #[error("operator diagonal entry {index} = {value} is not positive")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("slope at alpha = 0 is {0}; not a descent direction")]
    NotDescent(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
    #[error("line search found no decrease after {0} trials")]
    LineSearchFailed(usize),
    #[error("trace tail too short for rate estimation ({0} usable points)")]
    ShortTail(usize),
    #[error("trace is not strictly decreasing; no rate to estimate")]
    NoDecrease,
    #[error("problem row {0} has no finite metric value")]
    AllFailed(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
