use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("negative base {base} raised to fractional power {alpha}")]
    AlphaDomain { base: f64, alpha: f64 },
    #[error("unsupported generator: {0}")]
    UnsupportedGenerator(String),
    #[error("singular reference: entry {index} is {value}")]
    SingularReference { index: usize, value: f64 },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("sampling too coarse: estimated error {estimate:e} exceeds {budget:e}; refine by about {refine}x")]
    Resolution { estimate: f64, budget: f64, refine: usize },
    #[error("invalid thermal map: {0}")]
    InvalidMap(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("root not found: {0}")]
    RootNotFound(String),
    #[error("{0} did not converge")]
    NotConverged(&'static str),
    #[error("dimension {dim} exceeds cap {cap}")]
    SizeLimit { dim: usize, cap: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
