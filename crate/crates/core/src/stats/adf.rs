//! Augmented Dickey-Fuller unit-root test, constant-only regression.
//!
//! Δy_t = α + γ·y_{t−1} + Σ_{j=1..p} δ_j·Δy_{t−j} + ε_t, and the statistic
//! is the OLS t-ratio of γ. The lag order p minimizes AIC over 0..=max_lag
//! on a common sample; the final fit uses every available observation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

const MIN_LEN: usize = 50;

/// MacKinnon (2010) response surface for the constant-only case:
/// `cv(T) = b0 + b1/T + b2/T² + b3/T³`. Rows are 1%, 5%, 10%.
const CV_SURFACE: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

/// Asymptotic quantiles of the constant-only Dickey-Fuller distribution
/// (t, cumulative probability), used for a coarse p-value.
const DF_QUANTILES: [(f64, f64); 8] = [
    (-3.43, 0.01),
    (-3.12, 0.025),
    (-2.86, 0.05),
    (-2.57, 0.10),
    (-0.44, 0.90),
    (-0.07, 0.95),
    (0.23, 0.975),
    (0.60, 0.99),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "1%")]
    OnePercent,
    #[serde(rename = "5%")]
    FivePercent,
    #[serde(rename = "10%")]
    TenPercent,
}

impl Significance {
    pub const ALL: [Significance; 3] = [
        Significance::OnePercent,
        Significance::FivePercent,
        Significance::TenPercent,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    #[serde(rename = "1%")]
    pub one: f64,
    #[serde(rename = "5%")]
    pub five: f64,
    #[serde(rename = "10%")]
    pub ten: f64,
}

impl CriticalValues {
    pub fn at(&self, level: Significance) -> f64 {
        match level {
            Significance::OnePercent => self.one,
            Significance::FivePercent => self.five,
            Significance::TenPercent => self.ten,
        }
    }
}

/// Finite-sample critical values for `nobs` regression observations.
pub fn critical_values(nobs: usize) -> CriticalValues {
    let t = nobs as f64;
    let eval = |b: &[f64; 4]| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
    CriticalValues {
        one: eval(&CV_SURFACE[0]),
        five: eval(&CV_SURFACE[1]),
        ten: eval(&CV_SURFACE[2]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MaxLag {
    /// `⌊12·(n/100)^{1/4}⌋`.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub t_statistic: f64,
    pub n_lags: usize,
    pub max_lag: usize,
    pub n_obs: usize,
    pub lag_selection: String,
    pub critical_values: CriticalValues,
    pub reject_at: Vec<Significance>,
    /// Interpolated from the asymptotic table; `None` when not computed.
    pub approx_p: Option<f64>,
}

impl AdfResult {
    pub fn rejects(&self, level: Significance) -> bool {
        self.reject_at.contains(&level)
    }
}

pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn adf_test(series: &[f64], max_lag: MaxLag) -> Result<AdfResult> {
    let n = series.len();
    if n < MIN_LEN {
        return Err(StatsError::TooShort { len: n, min: MIN_LEN });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    // keep at least ~half the sample and a few residual degrees of freedom
    let ceiling = (n / 2).saturating_sub(3);
    let max_lag = match max_lag {
        MaxLag::Auto => schwert_max_lag(n).min(ceiling),
        MaxLag::Fixed(p) => {
            if p > ceiling {
                return Err(StatsError::TooShort {
                    len: n,
                    min: 2 * (p + 3),
                });
            }
            p
        }
    };

    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let n_lags = select_lag_aic(series, &dy, max_lag)?;
    let fit = fit(series, &dy, n_lags, n_lags)?;

    let critical_values = critical_values(fit.nobs);
    let reject_at = Significance::ALL
        .into_iter()
        .filter(|&s| fit.t_stat < critical_values.at(s))
        .collect();
    Ok(AdfResult {
        t_statistic: fit.t_stat,
        n_lags,
        max_lag,
        n_obs: fit.nobs,
        lag_selection: "aic".into(),
        critical_values,
        reject_at,
        approx_p: Some(approx_p_value(fit.t_stat)),
    })
}

/// Design matrix rows for `dy[start..]`: columns are the lagged level, the
/// constant, then `lags` lagged differences.
fn design(series: &[f64], dy: &[f64], start: usize, lags: usize) -> (DMatrix<f64>, DVector<f64>) {
    let nobs = dy.len() - start;
    let k = 2 + lags;
    let x = DMatrix::from_fn(nobs, k, |r, c| {
        let t = start + r;
        match c {
            0 => series[t],
            1 => 1.0,
            j => dy[t - (j - 1)],
        }
    });
    let y = DVector::from_fn(nobs, |r, _| dy[start + r]);
    (x, y)
}

/// AIC lag choice on the common sample `dy[max_lag..]`. One QR of the
/// widest design gives the SSR of every nested prefix model.
fn select_lag_aic(series: &[f64], dy: &[f64], max_lag: usize) -> Result<usize> {
    if max_lag == 0 {
        return Ok(0);
    }
    let (x, y) = design(series, dy, max_lag, max_lag);
    let nobs = y.len() as f64;
    let k_max = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    check_rank(&r)?;
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::Singular)?;
    let resid = &y - &x * beta;
    let ssr_full = resid.norm_squared();

    let mut best = (f64::INFINITY, 0usize);
    for p in 0..=max_lag {
        let k = 2 + p;
        let ssr: f64 = ssr_full + (k..k_max).map(|j| qty[j] * qty[j]).sum::<f64>();
        let llf = -0.5 * nobs * ((2.0 * std::f64::consts::PI).ln() + (ssr / nobs).ln() + 1.0);
        let aic = -2.0 * llf + 2.0 * k as f64;
        if aic < best.0 {
            best = (aic, p);
        }
    }
    Ok(best.1)
}

struct Fit {
    t_stat: f64,
    nobs: usize,
}

fn fit(series: &[f64], dy: &[f64], lags: usize, start: usize) -> Result<Fit> {
    let (x, y) = design(series, dy, start, lags);
    let nobs = y.len();
    let k = x.ncols();
    if nobs <= k {
        return Err(StatsError::TooShort {
            len: series.len(),
            min: k + 2 + lags,
        });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    check_rank(&r)?;
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(StatsError::Singular)?;
    let resid = &y - &x * &beta;
    let s2 = resid.norm_squared() / (nobs - k) as f64;
    // (XᵀX)⁻¹ = R⁻¹R⁻ᵀ; entry (0,0) is the squared norm of row 0 of R⁻¹.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(StatsError::Singular)?;
    let var0 = s2 * r_inv.row(0).norm_squared();
    Ok(Fit {
        t_stat: beta[0] / var0.sqrt(),
        nobs,
    })
}

fn check_rank(r: &DMatrix<f64>) -> Result<()> {
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].abs()).collect();
    let scale = diag.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 || diag.iter().any(|&d| d <= 1e-12 * scale) {
        return Err(StatsError::Singular);
    }
    Ok(())
}

/// Log-linear interpolation of the asymptotic table; tails are
/// extrapolated along the outermost segment and clamped to [0, 1].
fn approx_p_value(t: f64) -> f64 {
    let q = &DF_QUANTILES;
    let lower = |(t0, p0): (f64, f64), (t1, p1): (f64, f64)| {
        let w = (t - t0) / (t1 - t0);
        (p0.ln() + w * (p1.ln() - p0.ln())).exp()
    };
    let upper = |(t0, p0): (f64, f64), (t1, p1): (f64, f64)| {
        let (a, b) = ((1.0 - p0).ln(), (1.0 - p1).ln());
        let w = (t - t0) / (t1 - t0);
        1.0 - (a + w * (b - a)).exp()
    };
    let p = if t <= q[0].0 {
        lower(q[0], q[1])
    } else if t >= q[q.len() - 1].0 {
        upper(q[q.len() - 2], q[q.len() - 1])
    } else {
        let i = q.iter().rposition(|&(tq, _)| tq <= t).unwrap_or(0);
        if q[i + 1].1 > 0.5 && q[i].1 > 0.5 {
            upper(q[i], q[i + 1])
        } else {
            lower(q[i], q[i + 1])
        }
    };
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn walk(n: usize, seed: u64) -> Vec<f64> {
        noise(n, seed)
            .into_iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect()
    }

    #[test]
    fn critical_values_match_asymptotic_table_to_two_decimals() {
        let cv = critical_values(1_000_000);
        assert_eq!((cv.one * 100.0).round() / 100.0, -3.43);
        assert_eq!((cv.five * 100.0).round() / 100.0, -2.86);
        assert_eq!((cv.ten * 100.0).round() / 100.0, -2.57);
        let small = critical_values(100);
        assert!(small.one < small.five && small.five < small.ten && small.ten < 0.0);
    }

    #[test]
    fn critical_values_reproduce_large_sample_table() {
        // about 43.8k regression rows
        let cv = critical_values(43_800);
        assert!((cv.one - -3.430499).abs() < 2e-6);
        assert!((cv.five - -2.861606).abs() < 2e-6);
        assert!((cv.ten - -2.566805).abs() < 2e-6);
    }

    #[test]
    fn white_noise_rejects_at_one_percent() {
        let r = adf_test(&noise(2000, 1), MaxLag::Auto).unwrap();
        assert!(r.t_statistic < -10.0, "{r:?}");
        assert_eq!(r.reject_at, Significance::ALL.to_vec());
        assert!(r.approx_p.unwrap() < 1e-6);
    }

    #[test]
    fn random_walk_usually_not_rejected() {
        let r = adf_test(&walk(2000, 3), MaxLag::Auto).unwrap();
        assert!(!r.rejects(Significance::OnePercent), "{r:?}");
    }

    #[test]
    fn level_shift_does_not_change_statistic() {
        let y = noise(500, 5);
        let shifted: Vec<f64> = y.iter().map(|v| v + 37.5).collect();
        let a = adf_test(&y, MaxLag::Fixed(4)).unwrap();
        let b = adf_test(&shifted, MaxLag::Fixed(4)).unwrap();
        assert!((a.t_statistic - b.t_statistic).abs() < 1e-8);
        let a = adf_test(&y, MaxLag::Auto).unwrap();
        let b = adf_test(&shifted, MaxLag::Auto).unwrap();
        assert_eq!(a.n_lags, b.n_lags);
        assert!((a.t_statistic - b.t_statistic).abs() < 1e-8);
    }

    #[test]
    fn reject_set_is_downward_closed() {
        for seed in 0..40 {
            let mut y = walk(300, seed);
            // mix in mean reversion of varying strength
            let e = noise(300, seed + 100);
            let phi = 0.9 + 0.0025 * seed as f64;
            y[0] = 0.0;
            for t in 1..300 {
                y[t] = phi * y[t - 1] + e[t];
            }
            let r = adf_test(&y, MaxLag::Auto).unwrap();
            if r.rejects(Significance::OnePercent) {
                assert!(r.rejects(Significance::FivePercent));
            }
            if r.rejects(Significance::FivePercent) {
                assert!(r.rejects(Significance::TenPercent));
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            adf_test(&[1.0; 10], MaxLag::Auto),
            Err(StatsError::TooShort { .. })
        ));
        let mut y = noise(100, 0);
        y[3] = f64::NAN;
        assert_eq!(adf_test(&y, MaxLag::Auto), Err(StatsError::NonFinite));
        assert_eq!(adf_test(&[2.0; 100], MaxLag::Fixed(1)), Err(StatsError::Singular));
        assert!(matches!(
            adf_test(&noise(60, 0), MaxLag::Fixed(40)),
            Err(StatsError::TooShort { .. })
        ));
    }

    #[test]
    fn p_value_is_monotone_and_hits_table() {
        assert!((approx_p_value(-2.86) - 0.05).abs() < 1e-12);
        assert!((approx_p_value(-0.44) - 0.90).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..200 {
            let t = -8.0 + 0.05 * i as f64;
            let p = approx_p_value(t);
            assert!(p >= prev && (0.0..=1.0).contains(&p));
            prev = p;
        }
        assert!(approx_p_value(-22.99) < 1e-20);
    }

    #[test]
    fn schwert_bound() {
        assert_eq!(schwert_max_lag(100), 12);
        assert_eq!(schwert_max_lag(2000), 25);
    }
}
