use thiserror::Error;

/// Errors produced by the learning toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dense simulation cap exceeded: {requested} qubits requested, cap is {cap}")]
    DenseCap { requested: usize, cap: usize },

    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite or malformed numerical data: {0}")]
    Data(String),

    #[error("Choi matrix is not CPTP: {0}")]
    NotCptp(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unsupported schema version {found} (this build reads version {expected})")]
    Version { found: u64, expected: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
