use thiserror::Error;

pub type Result<T, E = TempoError> = std::result::Result<T, E>;

/// Every failure surfaced by the library. `code()` gives a stable
/// machine-readable tag used by the CLI.
#[derive(Debug, Error)]
pub enum TempoError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not invertible over R: slice ({i},{j}) is singular")]
    NotInvertibleOverR { i: usize, j: usize },

    #[error("slice ({i},{j}) is numerically defective (eigenvector condition {condition:.3e})")]
    NotDiagonalizableOverR { i: usize, j: usize, condition: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("walk enumeration budget of {cap} branches exceeded")]
    BudgetExceeded { cap: u64 },

    #[error("integer overflow in exact walk tally")]
    Overflow,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TempoError {
    pub fn code(&self) -> &'static str {
        match self {
            TempoError::Parse { .. } => "PARSE",
            TempoError::Validation(_) => "VALIDATION",
            TempoError::Index { .. } => "INDEX",
            TempoError::Dimension(_) => "DIMENSION",
            TempoError::NotInvertibleOverR { .. } => "NOT_INVERTIBLE_OVER_R",
            TempoError::NotDiagonalizableOverR { .. } => "NOT_DIAGONALIZABLE_OVER_R",
            TempoError::Numerical(_) => "NUMERICAL",
            TempoError::Parameter(_) => "PARAMETER",
            TempoError::BudgetExceeded { .. } => "BUDGET",
            TempoError::Overflow => "OVERFLOW",
            TempoError::Io(_) => "IO",
        }
    }
}
