use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: sample size n={n} must satisfy 2 <= n <= N={population}")]
    InvalidDesign { n: usize, population: usize },

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error(
        "degenerate attribute: population proportion is {0}, must lie strictly between 0 and 1"
    )]
    DegenerateAttribute(f64),

    #[error("degenerate auxiliary variable: {0}")]
    DegenerateAuxiliary(String),

    #[error("invalid moments: {0}")]
    InvalidMoments(String),

    #[error("singular transform: {0}")]
    SingularTransform(String),

    #[error("singular system: determinant {det:e} is not positive relative to scale {scale:e}")]
    SingularSystem { det: f64, scale: f64 },

    #[error("degenerate class: {0}")]
    DegenerateClass(String),

    #[error("zero sample mean of the auxiliary variable in a ratio-type term")]
    ZeroSampleMean,

    #[error("enumeration too large: C(N, n) = {count} exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("infeasible targets: {0}")]
    InfeasibleTargets(String),

    #[error("unknown estimator preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown output format `{0}` (expected csv, json or text)")]
    UnknownFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
