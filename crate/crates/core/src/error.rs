use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or block structures that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// An out-of-range argument (rank, bound, probability, cluster count).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Input values that violate a data requirement (non-finite, unsorted, negative).
    #[error("data error: {0}")]
    Data(String),

    #[error("row {0} sums to zero")]
    ZeroRow(usize),

    #[error("column {0} sums to zero")]
    ZeroColumn(usize),

    #[error("no protruding structure: k = 0 singular values above the noise level")]
    NoStructure,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
