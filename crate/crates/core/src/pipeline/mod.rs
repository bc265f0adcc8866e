//! End-to-end orchestration: ingest, stationarity check, chronological
//! split, Z-score, decomposition, per-component seasonal adjustment and
//! recurrent forecasting, recombination and scoring, plus the benchmark
//! matrix and the strict-causal walk-forward variant.

mod config;
mod forecaster;
mod report;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{DataSource, Decomposition, EvalMode, ModelSpec, PipelineConfig};
pub use forecaster::{FittedModel, Forecaster, PersistenceForecaster, RecurrentForecaster};
pub use report::{emit_report, load_fitted, save_fitted};
pub use run::{
    decompose, decompose_segments, evaluate_fitted, fit_entry, fit_matrix, forecast_causal, forecast_segment, prepare, run_benchmark, run_entry,
    run_proposed, score, walk_forward_eval, ArtifactHashes, ComponentModel, EntryRun, FittedEntry,
    Forecast, Prepared, Provenance, RunArtifacts, SegmentDecomposition,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} stage: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Tag an error from a lower layer with the stage it came from.
pub(crate) fn stage<E: std::fmt::Display>(name: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage: name,
        message: e.to_string(),
    }
}
