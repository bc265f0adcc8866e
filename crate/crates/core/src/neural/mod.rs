//! Windowed supervision and a from-scratch (Bi)LSTM regressor.
//!
//! Models map a window of `W` scalars to one scalar forecast. Batches are
//! processed as matrices (features × batch) and trained with Adam on
//! gradients from backpropagation through time.

mod backprop;
mod dataset;
mod model;
mod train;

use thiserror::Error;

pub use backprop::{gradient_check, loss_and_gradients, GradientCheck, Loss};
pub use dataset::{default_window, window_supervise, WindowDataset};
pub use model::{Directionality, LstmBlock, RecurrentModel};
pub use train::{derive_seed, train, Adam, TrainConfig, TrainOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("window and horizon must be positive")]
    ZeroWindow,
    #[error("series of length {len} is too short for window {window} and horizon {horizon}")]
    SeriesTooShort { len: usize, window: usize, horizon: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Diverged { epoch: usize, batch: usize, detail: String },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, NeuralError>;
