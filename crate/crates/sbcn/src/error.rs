//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graphs are not comparable: {0}")]
    InvalidComparison(String),

    #[error("variable {index} has a degenerate marginal ({marginal})")]
    DegenerateVariable { index: usize, marginal: f64 },

    #[error("parent set of size {got} exceeds the cap of {cap}")]
    ParentLimitExceeded { got: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("illegal move: {0}")]
    InvalidMove(String),

    #[error("exhaustive search is limited to {cap} nodes, got {got}")]
    OracleTooLarge { got: usize, cap: usize },

    #[error("{origin}: data row {row}, column {column}: {message}")]
    DatasetParse {
        origin: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("failed to read {what}: {message}")]
    Document { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
