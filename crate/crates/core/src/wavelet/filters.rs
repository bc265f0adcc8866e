use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Result, WaveletError};

pub const MAX_ORDER: usize = 38;

const INVARIANT_TOL: f64 = 1e-10;

/// Orthonormal Daubechies analysis/synthesis pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPair {
    /// Vanishing moments.
    pub order: usize,
    pub lowpass: Vec<f64>,
    /// `highpass[k] = (−1)^k · lowpass[2N−1−k]`.
    pub highpass: Vec<f64>,
}

impl FilterPair {
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    pub fn name(&self) -> String {
        format!("db{}", self.order)
    }

    fn from_lowpass(order: usize, lowpass: Vec<f64>) -> Self {
        let l = lowpass.len();
        let highpass = (0..l)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[l - 1 - k]
            })
            .collect();
        Self {
            order,
            lowpass,
            highpass,
        }
    }

    /// Largest violation among the sum, energy and even-shift orthogonality
    /// conditions.
    pub fn invariant_error(&self) -> f64 {
        let h = &self.lowpass;
        let sum_err = (h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
        let ortho_err = (0..h.len() / 2)
            .map(|m| (even_shift_correlation(h, m) - if m == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        sum_err.max(ortho_err)
    }
}

fn even_shift_correlation(h: &[f64], m: usize) -> f64 {
    h.iter()
        .zip(h.iter().skip(2 * m))
        .map(|(a, b)| a * b)
        .sum()
}

/// Minimum-phase Daubechies filter with `order` vanishing moments.
///
/// The halfband polynomial `P(y) = Σ_{k<N} C(N−1+k, k)·y^k` is factored
/// numerically, every root is mapped to the `z` root inside the unit
/// circle, and the resulting filter is refined by Newton iterations on the
/// orthonormality equations so the invariants hold to rounding error.
pub fn daubechies_filters(order: usize) -> Result<FilterPair> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(WaveletError::OrderOutOfRange(order));
    }
    let binomial = binomial_row(order);
    let q = minimum_phase_factor(order)?;
    let mut h = polish(order, convolve(&binomial, &q))?;
    if h.iter().sum::<f64>() < 0.0 {
        h.iter_mut().for_each(|v| *v = -*v);
    }
    let pair = FilterPair::from_lowpass(order, h);
    let err = pair.invariant_error();
    if !(err <= INVARIANT_TOL) {
        return Err(WaveletError::Factorization(format!(
            "db{order} invariants off by {err:e}"
        )));
    }
    Ok(pair)
}

/// Coefficients of (1 + w)^n.
fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; row.len() + 1];
        for (i, c) in row.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c;
        }
        row = next;
    }
    row
}

/// Convolution with compensated (error-free transform) summation; the
/// binomial factor has entries up to ~10¹⁰ while the result is O(1).
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = k.saturating_sub(b.len() - 1);
        let hi = k.min(a.len() - 1);
        let (mut sum, mut err) = (0.0f64, 0.0f64);
        for i in lo..=hi {
            let p = a[i] * b[k - i];
            let p_err = a[i].mul_add(b[k - i], -p);
            let t = sum + p;
            let bv = t - sum;
            err += (sum - (t - bv)) + (p - bv) + p_err;
            sum = t;
        }
        *slot = sum + err;
    }
    out
}

/// The degree-(N−1) factor q(w) = Π(1 − z_k·w) over the selected roots,
/// scaled so that (1 + w)^N·q(w) sums to √2.
fn minimum_phase_factor(order: usize) -> Result<Vec<f64>> {
    let degree = order - 1;
    if degree == 0 {
        return Ok(vec![std::f64::consts::SQRT_2 / 2f64.powi(order as i32)]);
    }
    // P(y) coefficients, ascending powers
    let p: Vec<f64> = (0..order)
        .map(|k| binomial(order - 1 + k, k))
        .collect();
    let y_roots = polynomial_roots(&p)?;

    let mut poly: Vec<Complex<f64>> = vec![Complex::new(1.0, 0.0)];
    for y in y_roots {
        // z + 1/z = 2 − 4y
        let c = Complex::new(2.0, 0.0) - y * 4.0;
        let disc = (c * c - Complex::new(4.0, 0.0)).sqrt();
        let z1 = (c + disc) * 0.5;
        let z2 = (c - disc) * 0.5;
        let z = if z1.norm() < z2.norm() { z1 } else { z2 };
        // multiply by (1 − z w)
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (i, coef) in poly.iter().enumerate() {
            next[i] += *coef;
            next[i + 1] -= *coef * z;
        }
        poly = next;
    }
    let q: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let total: f64 = q.iter().sum::<f64>() * 2f64.powi(order as i32);
    Ok(q.iter()
        .map(|v| v * std::f64::consts::SQRT_2 / total)
        .collect())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Roots of Σ c_k·y^k via companion-matrix eigenvalues, each refined by
/// Newton's method on the original polynomial.
fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let eval = |y: Complex<f64>| {
        let mut v = Complex::new(0.0, 0.0);
        let mut d = Complex::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            d = d * y + v;
            v = v * y + c;
        }
        (v, d)
    };
    let mut roots = Vec::with_capacity(degree);
    for mut y in eig.iter().copied() {
        for _ in 0..50 {
            let (v, d) = eval(y);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            y -= step;
            if step.norm() <= 1e-16 * y.norm().max(1.0) {
                break;
            }
        }
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(WaveletError::Factorization("non-finite root".into()));
        }
        roots.push(y);
    }
    Ok(roots)
}

/// Orthonormal basis of the vanishing-moment constraints on a filter of
/// `len` taps: `(−1)^k·p_j(k)` for the discrete orthonormal polynomials
/// `p_j`, j < `count`, built by a Stieltjes recurrence with
/// reorthogonalization. Columns of the returned matrix.
fn moment_basis(len: usize, count: usize) -> DMatrix<f64> {
    let centre = (len as f64 - 1.0) / 2.0;
    let scale = len as f64 / 2.0;
    let x: Vec<f64> = (0..len).map(|k| (k as f64 - centre) / scale).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(count);
    let mut current = DVector::from_element(len, 1.0);
    for _ in 0..count {
        for _ in 0..2 {
            for prev in &basis {
                let proj = prev.dot(&current);
                current -= prev * proj;
            }
        }
        current /= current.norm();
        basis.push(current.clone());
        current = DVector::from_fn(len, |k, _| x[k] * current[k]);
    }
    DMatrix::from_fn(len, count, |k, j| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * basis[j][k]
    })
}

/// Newton refinement of the taps so that Σ_k h_k·h_{k+2m} = δ_m for
/// m < N while keeping the N vanishing moments.
fn polish(order: usize, mut h: Vec<f64>) -> Result<Vec<f64>> {
    let len = h.len();
    let moments = moment_basis(len, order);
    let residual = |h: &[f64]| -> DVector<f64> {
        let hv = DVector::from_column_slice(h);
        let mut f = DVector::zeros(len);
        for m in 0..order {
            f[m] = even_shift_correlation(h, m) - if m == 0 { 1.0 } else { 0.0 };
        }
        let proj = moments.transpose() * hv;
        f.rows_mut(order, order).copy_from(&proj);
        f
    };
    let mut best = (f64::INFINITY, h.clone());
    let mut stalls = 0;
    for _ in 0..60 {
        let f = residual(&h);
        let norm = f.amax();
        if norm < best.0 {
            best = (norm, h.clone());
            stalls = 0;
        } else {
            stalls += 1;
        }
        if norm < 1e-16 || stalls >= 6 {
            break;
        }
        // d/dh_j Σ_k h_k h_{k+2m} = h_{j+2m} + h_{j−2m}
        let jac = DMatrix::from_fn(len, len, |row, j| {
            if row < order {
                let m = row;
                let mut d = 0.0;
                if j + 2 * m < len {
                    d += h[j + 2 * m];
                }
                if j >= 2 * m {
                    d += h[j - 2 * m];
                }
                d
            } else {
                moments[(j, row - order)]
            }
        });
        // truncated SVD: nearly flat directions would otherwise amplify
        // rounding noise into large steps
        let svd = jac.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let step = svd
            .solve(&(-f), cutoff)
            .map_err(|e| WaveletError::Factorization(e.into()))?;
        for (hi, s) in h.iter_mut().zip(step.iter()) {
            *hi += s;
        }
    }
    Ok(best.1)
}
