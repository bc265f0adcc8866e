//! Daubechies filter synthesis and the decimated (DWT), undecimated (SWT)
//! and packet (WPD) transforms, each with per-band full-length
//! reconstruction.
//!
//! Analysis uses correlation: `a[i] = Σ_j h[j]·x[2i + j]`, with the signal
//! extended past its ends by the chosen [`Boundary`]. Synthesis is the exact
//! adjoint, so the orthonormal filter bank reconstructs perfectly in both
//! boundary modes.

mod filters;
mod transform;

pub use filters::{daubechies_filters, FilterPair, MAX_ORDER};
pub use transform::{
    dwt_decompose, frequency_rank, swt_decompose, wpd_decompose, wpd_reconstruct, Boundary,
    DwtCoefficients, SubseriesSet, SwtCoefficients, WaveletTree,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WaveletError {
    #[error("Daubechies order {0} outside 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("filter factorization failed: {0}")]
    Factorization(String),
    #[error("series of length {len} too short for level {level} (need {min})")]
    TooShort { len: usize, level: usize, min: usize },
    #[error("level must be at least 1")]
    ZeroLevel,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("corrupt tree: {0}")]
    CorruptTree(String),
}

pub type Result<T> = std::result::Result<T, WaveletError>;
