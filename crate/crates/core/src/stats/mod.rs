//! Stationarity testing and forecast-accuracy metrics.

mod adf;
mod metrics;
mod report;

pub use adf::{adf_test, critical_values, schwert_max_lag, AdfResult, MaxLag, Significance};
pub use metrics::{mae, r2, rmse};
pub use report::{EvalReport, EvalRow, FailedEntry, Overall};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("empty input")]
    Empty,
    #[error("actual values are constant; R² is undefined")]
    ConstantActual,
    #[error("series of length {len} is too short (need {min})")]
    TooShort { len: usize, min: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("regression matrix is singular")]
    Singular,
}

pub type Result<T> = std::result::Result<T, StatsError>;
