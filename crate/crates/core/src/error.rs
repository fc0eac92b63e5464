use std::io;

use thiserror::Error;

/// Errors produced by ingestion, calibration, simulation and validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("row {row}: expected at least {expected} columns, found {found}")]
    MalformedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}: crossed book (ask {ask} < bid {bid})")]
    CrossedBook { row: usize, ask: i64, bid: i64 },

    #[error("row {row}: non-positive price (ask {ask}, bid {bid})")]
    NonPositivePrice { row: usize, ask: i64, bid: i64 },

    #[error("row {row}: time {time} goes backwards")]
    TimeNotMonotone { row: usize, time: f64 },

    #[error("message file has {messages} rows but orderbook file has {orderbook}")]
    Alignment { messages: usize, orderbook: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unstable Hawkes kernel: spectral radius {0:.6} >= 1")]
    Unstable(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Markov chain has no unique stationary distribution: {0}")]
    NotErgodic(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("window grids differ: {0}")]
    GridMismatch(String),

    #[error("malformed binary event stream: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
