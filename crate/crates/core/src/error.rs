use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while building datasets, evaluating distributions,
/// running tests, rendering plots or reading and writing files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("length mismatch: {predictions} predictions but {outcomes} outcomes")]
    LengthMismatch { predictions: usize, outcomes: usize },

    #[error("prediction {value} at position {index} is outside the open interval (0, 1)")]
    PredictionOutOfRange { index: usize, value: f64 },

    #[error("outcome not binary: value {value} at position {index}")]
    OutcomeNotBinary { index: usize, value: i64 },

    #[error("clamp epsilon {0} must lie in (0, 0.5)")]
    InvalidClamp(f64),

    #[error("argument `{name}` must be non-negative, got {value}")]
    NegativeArgument { name: &'static str, value: f64 },

    #[error("level {0} must lie strictly between 0 and 1")]
    LevelOutOfRange(f64),

    #[error("invalid grouping: {0}")]
    InvalidGroups(String),

    #[error("degenerate group {group}: expected events {expected} in a group of {size}")]
    DegenerateGroup {
        group: usize,
        expected: f64,
        size: usize,
    },

    #[error("replications must be at least 1")]
    InvalidReplications,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("plot inputs do not match: {0}")]
    PlotMismatch(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unsupported schema: {0}")]
    Schema(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
