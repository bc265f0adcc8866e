//! Additive seasonal adjustment with positional seasonal indices.
//!
//! Indices are fitted on the training segment only and applied at absolute
//! slot positions, so train and test share one phase reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeasonalError {
    #[error("seasonal period must be positive")]
    ZeroPeriod,
    #[error("fit segment has {len} values; need two full periods ({min})")]
    TooShort { len: usize, min: usize },
    #[error("fit segment contains non-finite values")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, SeasonalError>;

/// How the per-position deviations are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    /// Positional mean minus grand mean.
    #[default]
    Positional,
    /// Positional mean of deviations from a centered moving average.
    MovingAverage,
}

impl std::str::FromStr for IndexMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "positional" => Ok(IndexMethod::Positional),
            "moving_average" => Ok(IndexMethod::MovingAverage),
            other => Err(format!("unknown seasonal index method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalModel {
    pub period: usize,
    /// Absolute slot index of phase 0.
    pub origin: usize,
    /// Zero-sum seasonal indices, one per phase.
    pub indices: Vec<f64>,
    pub method: IndexMethod,
}

/// Fit positional indices on `train`, whose first value sits at absolute
/// slot `origin`.
pub fn sam_fit(train: &[f64], period: usize, origin: usize) -> Result<SeasonalModel> {
    sam_fit_with(train, period, origin, IndexMethod::Positional)
}

pub fn sam_fit_with(
    train: &[f64],
    period: usize,
    origin: usize,
    method: IndexMethod,
) -> Result<SeasonalModel> {
    if period == 0 {
        return Err(SeasonalError::ZeroPeriod);
    }
    if train.len() < 2 * period {
        return Err(SeasonalError::TooShort {
            len: train.len(),
            min: 2 * period,
        });
    }
    if train.iter().any(|v| !v.is_finite()) {
        return Err(SeasonalError::NonFinite);
    }

    let deviations: Vec<Option<f64>> = match method {
        IndexMethod::Positional => {
            let grand = train.iter().sum::<f64>() / train.len() as f64;
            train.iter().map(|v| Some(v - grand)).collect()
        }
        IndexMethod::MovingAverage => centered_moving_average(train, period)
            .into_iter()
            .zip(train)
            .map(|(trend, v)| trend.map(|t| v - t))
            .collect(),
    };

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (t, dev) in deviations.iter().enumerate() {
        if let Some(d) = dev {
            sums[t % period] += d;
            counts[t % period] += 1;
        }
    }
    let mut indices: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let centre = indices.iter().sum::<f64>() / period as f64;
    indices.iter_mut().for_each(|v| *v -= centre);

    Ok(SeasonalModel {
        period,
        origin,
        indices,
        method,
    })
}

/// Centered moving average of width `period` (a 2×period average when the
/// period is even). Edges where the window does not fit are `None`.
fn centered_moving_average(x: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = x.len();
    let mut out = vec![None; n];
    if period == 1 {
        return x.iter().copied().map(Some).collect();
    }
    let half = period / 2;
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let window = |lo: usize, hi: usize| (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
    for (t, slot) in out.iter_mut().enumerate() {
        if t < half || t + half >= n {
            continue;
        }
        *slot = Some(if period % 2 == 1 {
            window(t - half, t + half + 1)
        } else {
            0.5 * (window(t - half, t + half) + window(t + 1 - half, t + half + 1))
        });
    }
    out
}

impl SeasonalModel {
    /// Index applied at absolute slot `slot`.
    pub fn index_at(&self, slot: usize) -> f64 {
        let phase = (slot as i64 - self.origin as i64).rem_euclid(self.period as i64) as usize;
        self.indices[phase]
    }

    pub fn is_zero(&self) -> bool {
        self.indices.iter().all(|v| *v == 0.0)
    }
}

/// `out[t] = series[t] − index(start_slot + t)`.
pub fn sam_deseasonalize(series: &[f64], model: &SeasonalModel, start_slot: usize) -> Vec<f64> {
    series
        .iter()
        .enumerate()
        .map(|(t, v)| v - model.index_at(start_slot + t))
        .collect()
}

/// Exact inverse of [`sam_deseasonalize`] at the same positions.
pub fn sam_reseasonalize(values: &[f64], model: &SeasonalModel, start_slot: usize) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(t, v)| v + model.index_at(start_slot + t))
        .collect()
}
