use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}: unparseable date `{value}`")]
    BadDate { row: usize, value: String },

    #[error("row {row}, column `{column}`: {reason}")]
    BadCell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("series `{series}`: duplicate date {date}")]
    DuplicateDate { series: String, date: String },

    #[error("series `{series}`: dates not strictly increasing at {date}")]
    UnorderedDates { series: String, date: String },

    #[error("series `{series}`: nonpositive level {value} at index {index}")]
    NonPositive {
        series: String,
        index: usize,
        value: f64,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("no common dates across the input series")]
    EmptyIntersection,

    #[error("series `{series}`: forward fill gap of {gap_days} days at {date} exceeds limit {limit}")]
    FillGapExceeded {
        series: String,
        date: String,
        gap_days: i64,
        limit: u32,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid degrees of freedom: {0}")]
    DegreesOfFreedom(String),

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
