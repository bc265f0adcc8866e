//! Seeded synthetic series used by tests, fixtures and the bundled demo
//! configuration.

use chrono::NaiveDateTime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ingest::TimeSeries;

/// Two sinusoids on a constant level plus AR(1) noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineMix {
    pub n: usize,
    pub level: f64,
    pub fast_amplitude: f64,
    pub fast_period: f64,
    pub slow_amplitude: f64,
    pub slow_period: f64,
    pub ar_coefficient: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SineMix {
    fn default() -> Self {
        Self {
            n: 5000,
            level: 8.0,
            fast_amplitude: 2.5,
            fast_period: 24.0,
            slow_amplitude: 1.5,
            slow_period: 548.0,
            ar_coefficient: 0.6,
            noise_std: 0.2,
            seed: 17,
        }
    }
}

impl SineMix {
    pub fn values(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let eps = Normal::new(0.0, self.noise_std).expect("noise_std must be finite and non-negative");
        let tau = std::f64::consts::TAU;
        let mut ar = 0.0;
        (0..self.n)
            .map(|t| {
                ar = self.ar_coefficient * ar + eps.sample(&mut rng);
                let t = t as f64;
                self.level
                    + self.fast_amplitude * (tau * t / self.fast_period).sin()
                    + self.slow_amplitude * (tau * t / self.slow_period + 0.3).sin()
                    + ar
            })
            .collect()
    }

    pub fn series(&self) -> TimeSeries {
        TimeSeries::from_values(epoch(), &self.values())
    }
}

/// i.i.d. standard normal draws shifted to `level`.
pub fn white_noise(n: usize, level: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            level + e
        })
        .collect()
}

/// Driftless Gaussian random walk starting at zero.
pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut acc = 0.0;
    white_noise(n, 0.0, seed)
        .into_iter()
        .map(|e| {
            acc += e;
            acc
        })
        .collect()
}

/// First slot of generated series: 2018-01-01 00:00.
pub fn epoch() -> NaiveDateTime {
    chrono::NaiveDate::from_ymd_opt(2018, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid epoch")
}
