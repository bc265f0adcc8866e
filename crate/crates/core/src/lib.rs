//! Hybrid wind-speed forecasting toolkit.
//!
//! The crate chains hourly data ingestion and cleaning, an ADF stationarity
//! gate, a two-stage decomposition (wavelet packets followed by additive
//! seasonal adjustment), one recurrent forecaster per subseries and horizon,
//! and recombination into a final forecast scored with MAE, RMSE and R².
//!
//! Data-parallel stages (per-leaf reconstruction, per-model training, batch
//! prediction) run on rayon when the `parallel` feature is enabled and fall
//! back to plain iterators otherwise. See [`par`].

pub mod ingest;
pub mod neural;
pub mod par;
pub mod pipeline;
pub mod seasonal;
pub mod selftest;
pub mod stats;
pub mod synthetic;
pub mod wavelet;

pub use ingest::{CleanReport, Normalizer, RawSeries, TimeSeries};
pub use neural::{Directionality, RecurrentModel, TrainConfig, WindowDataset};
pub use par::Execution;
pub use pipeline::{PipelineConfig, RunArtifacts};
pub use seasonal::SeasonalModel;
pub use stats::{AdfResult, EvalReport};
pub use wavelet::{Boundary, FilterPair, SubseriesSet, WaveletTree};
