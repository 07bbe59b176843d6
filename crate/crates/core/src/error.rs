use thiserror::Error;

/// Errors produced by the core algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite entry in column {column} (row {row})")]
    NonFinite { column: usize, row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {0} in subset")]
    DuplicateIndex(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not a valid Gram matrix: {0}")]
    NotGram(String),

    #[error("basis is numerically rank deficient (smallest singular value {sigma_min:e}, largest {sigma_max:e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("solver failed at parameter point {point:?}: {reason}")]
    SolverFailure { point: Vec<f64>, reason: String },

    #[error("error metric undefined: truth has zero norm")]
    ZeroTruth,

    #[error("too many subsets to enumerate: C({n}, {m}) exceeds {limit}")]
    TooManySubsets { n: usize, m: usize, limit: u64 },

    #[error("malformed ensemble file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
