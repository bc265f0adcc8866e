use serde::{Deserialize, Serialize};

use super::{FilterPair, Result, WaveletError};
use crate::par::{self, Execution};

/// Signal extension past either end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Half-sample symmetric: `x[−1] = x[0]`, `x[n] = x[n−1]`.
    #[default]
    Symmetric,
    /// Circular wrap. Odd-length inputs are padded with their last sample.
    Periodic,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Symmetric => "symmetric",
            Boundary::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "symmetric" => Ok(Boundary::Symmetric),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!("unknown boundary mode `{other}`")),
        }
    }
}

fn symmetric_index(k: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = k.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Number of coefficients one analysis step produces from `n` samples.
fn coefficient_len(n: usize, taps: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Symmetric => (n - 1) / 2 + taps / 2,
        Boundary::Periodic => n.div_ceil(2),
    }
}

/// One analysis step: (approximation, detail).
fn analyze(x: &[f64], f: &FilterPair, boundary: Boundary) -> (Vec<f64>, Vec<f64>) {
    let taps = f.len();
    let n = x.len();
    let m = coefficient_len(n, taps, boundary);
    let mut approx = vec![0.0; m];
    let mut detail = vec![0.0; m];
    match boundary {
        Boundary::Symmetric => {
            let first = 1 - (taps / 2) as isize;
            for c in 0..m {
                let base = 2 * (first + c as isize);
                let (mut a, mut d) = (0.0, 0.0);
                for j in 0..taps {
                    let v = x[symmetric_index(base + j as isize, n)];
                    a += f.lowpass[j] * v;
                    d += f.highpass[j] * v;
                }
                approx[c] = a;
                detail[c] = d;
            }
        }
        Boundary::Periodic => {
            let padded = 2 * m;
            let sample = |k: usize| {
                let k = k % padded;
                if k < n {
                    x[k]
                } else {
                    x[n - 1]
                }
            };
            for c in 0..m {
                let (mut a, mut d) = (0.0, 0.0);
                for j in 0..taps {
                    let v = sample(2 * c + j);
                    a += f.lowpass[j] * v;
                    d += f.highpass[j] * v;
                }
                approx[c] = a;
                detail[c] = d;
            }
        }
    }
    (approx, detail)
}

/// Adjoint of [`analyze`], truncated to `out_len` samples. Either branch
/// may be absent (treated as zeros).
fn synthesize(
    approx: Option<&[f64]>,
    detail: Option<&[f64]>,
    out_len: usize,
    f: &FilterPair,
    boundary: Boundary,
) -> Vec<f64> {
    let taps = f.len();
    let m = coefficient_len(out_len, taps, boundary);
    let mut out = match boundary {
        Boundary::Symmetric => vec![0.0; out_len],
        Boundary::Periodic => vec![0.0; 2 * m],
    };
    let mut scatter = |coeffs: &[f64], filter: &[f64]| match boundary {
        Boundary::Symmetric => {
            let first = 1 - (taps / 2) as isize;
            for (c, &v) in coeffs.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let base = 2 * (first + c as isize);
                for (j, &h) in filter.iter().enumerate() {
                    let k = base + j as isize;
                    if k >= 0 && (k as usize) < out_len {
                        out[k as usize] += v * h;
                    }
                }
            }
        }
        Boundary::Periodic => {
            let padded = 2 * m;
            for (c, &v) in coeffs.iter().enumerate() {
                for (j, &h) in filter.iter().enumerate() {
                    out[(2 * c + j) % padded] += v * h;
                }
            }
        }
    };
    if let Some(a) = approx {
        scatter(a, &f.lowpass);
    }
    if let Some(d) = detail {
        scatter(d, &f.highpass);
    }
    out.truncate(out_len);
    out
}

fn validate(series: &[f64], level: usize) -> Result<()> {
    if level == 0 {
        return Err(WaveletError::ZeroLevel);
    }
    let min = (1usize << level).max(2);
    if series.len() < min {
        return Err(WaveletError::TooShort {
            len: series.len(),
            level,
            min,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(WaveletError::NonFinite);
    }
    Ok(())
}

/// Complete packet tree. `nodes[d]` holds the `2^d` nodes at depth `d` in
/// natural order (approximation child before detail child); `nodes[0]` is
/// the input itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletTree {
    pub level: usize,
    pub boundary: Boundary,
    pub filters: FilterPair,
    pub original_length: usize,
    /// Node length at each depth, `lengths[0] == original_length`.
    pub lengths: Vec<usize>,
    pub nodes: Vec<Vec<Vec<f64>>>,
}

/// Full-length subseries, one per leaf, summing to the decomposed input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubseriesSet {
    pub subseries: Vec<Vec<f64>>,
    pub leaf_order: String,
}

impl SubseriesSet {
    pub fn len(&self) -> usize {
        self.subseries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subseries.is_empty()
    }

    /// Element-wise sum of all subseries.
    pub fn sum(&self) -> Vec<f64> {
        let n = self.subseries.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for s in &self.subseries {
            for (o, v) in out.iter_mut().zip(s) {
                *o += v;
            }
        }
        out
    }
}

pub fn wpd_decompose(
    series: &[f64],
    level: usize,
    filters: &FilterPair,
    boundary: Boundary,
) -> Result<WaveletTree> {
    validate(series, level)?;
    let mut nodes: Vec<Vec<Vec<f64>>> = vec![vec![series.to_vec()]];
    let mut lengths = vec![series.len()];
    for d in 0..level {
        let mut next = Vec::with_capacity(2 << d);
        for node in &nodes[d] {
            let (a, det) = analyze(node, filters, boundary);
            next.push(a);
            next.push(det);
        }
        lengths.push(next[0].len());
        nodes.push(next);
    }
    Ok(WaveletTree {
        level,
        boundary,
        filters: filters.clone(),
        original_length: series.len(),
        lengths,
        nodes,
    })
}

impl WaveletTree {
    pub fn leaves(&self) -> &[Vec<f64>] {
        &self.nodes[self.level]
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.level
    }

    fn check_shape(&self) -> Result<()> {
        if self.nodes.len() != self.level + 1 || self.lengths.len() != self.level + 1 {
            return Err(WaveletError::CorruptTree(format!(
                "expected {} depths",
                self.level + 1
            )));
        }
        if self.lengths[0] != self.original_length {
            return Err(WaveletError::CorruptTree("root length mismatch".into()));
        }
        for (d, level_nodes) in self.nodes.iter().enumerate() {
            if level_nodes.len() != 1 << d {
                return Err(WaveletError::CorruptTree(format!(
                    "depth {d} has {} nodes",
                    level_nodes.len()
                )));
            }
            if d > 0
                && self.lengths[d]
                    != coefficient_len(self.lengths[d - 1], self.filters.len(), self.boundary)
            {
                return Err(WaveletError::CorruptTree(format!("depth {d} length record")));
            }
            if level_nodes.iter().any(|n| n.len() != self.lengths[d]) {
                return Err(WaveletError::CorruptTree(format!(
                    "depth {d} node length differs from {}",
                    self.lengths[d]
                )));
            }
        }
        Ok(())
    }

    /// Full-length contribution of one node, all other nodes at its depth
    /// zeroed.
    pub fn reconstruct_node(&self, depth: usize, index: usize) -> Result<Vec<f64>> {
        self.check_shape()?;
        if depth > self.level || index >= 1 << depth {
            return Err(WaveletError::CorruptTree(format!(
                "no node ({depth}, {index})"
            )));
        }
        let mut signal = self.nodes[depth][index].clone();
        let mut idx = index;
        for d in (1..=depth).rev() {
            let out_len = self.lengths[d - 1];
            signal = if idx % 2 == 0 {
                synthesize(Some(&signal), None, out_len, &self.filters, self.boundary)
            } else {
                synthesize(None, Some(&signal), out_len, &self.filters, self.boundary)
            };
            idx /= 2;
        }
        Ok(signal)
    }

    /// Per-leaf subseries in natural leaf order.
    pub fn reconstruct_nodes(&self, exec: Execution) -> Result<SubseriesSet> {
        self.check_shape()?;
        let leaves: Vec<Result<Vec<f64>>> =
            par::map_range(exec, self.leaf_count(), |i| self.reconstruct_node(self.level, i));
        Ok(SubseriesSet {
            subseries: leaves.into_iter().collect::<Result<_>>()?,
            leaf_order: "natural".into(),
        })
    }
}

/// Full inverse from the leaves upward.
pub fn wpd_reconstruct(tree: &WaveletTree) -> Result<Vec<f64>> {
    tree.check_shape()?;
    let mut current = tree.leaves().to_vec();
    for d in (1..=tree.level).rev() {
        let out_len = tree.lengths[d - 1];
        current = current
            .chunks(2)
            .map(|pair| {
                synthesize(
                    Some(&pair[0]),
                    Some(&pair[1]),
                    out_len,
                    &tree.filters,
                    tree.boundary,
                )
            })
            .collect();
    }
    Ok(current.remove(0))
}

/// Position of natural-order leaf `index` when leaves are sorted by
/// frequency (inverse Gray code).
pub fn frequency_rank(index: usize) -> usize {
    let mut rank = index;
    let mut shift = index >> 1;
    while shift > 0 {
        rank ^= shift;
        shift >>= 1;
    }
    rank
}

/// Decimated multilevel transform; `bands` = `[A_L, D_L, …, D_1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwtCoefficients {
    pub level: usize,
    pub boundary: Boundary,
    pub filters: FilterPair,
    pub original_length: usize,
    pub lengths: Vec<usize>,
    pub bands: Vec<Vec<f64>>,
}

pub fn dwt_decompose(
    series: &[f64],
    level: usize,
    filters: &FilterPair,
    boundary: Boundary,
) -> Result<DwtCoefficients> {
    validate(series, level)?;
    let mut lengths = vec![series.len()];
    let mut approx = series.to_vec();
    let mut details = Vec::with_capacity(level);
    for _ in 0..level {
        let (a, d) = analyze(&approx, filters, boundary);
        lengths.push(a.len());
        details.push(d);
        approx = a;
    }
    let mut bands = vec![approx];
    bands.extend(details.into_iter().rev());
    Ok(DwtCoefficients {
        level,
        boundary,
        filters: filters.clone(),
        original_length: series.len(),
        lengths,
        bands,
    })
}

impl DwtCoefficients {
    /// Depth of band `b` (0 is the final approximation).
    fn band_depth(&self, b: usize) -> usize {
        if b == 0 {
            self.level
        } else {
            self.level + 1 - b
        }
    }

    pub fn reconstruct_band(&self, b: usize) -> Result<Vec<f64>> {
        if self.bands.len() != self.level + 1 || b > self.level {
            return Err(WaveletError::CorruptTree(format!("no band {b}")));
        }
        let depth = self.band_depth(b);
        let out_len = self.lengths[depth - 1];
        let mut signal = if b == 0 {
            synthesize(Some(&self.bands[0]), None, out_len, &self.filters, self.boundary)
        } else {
            synthesize(None, Some(&self.bands[b]), out_len, &self.filters, self.boundary)
        };
        for d in (1..depth).rev() {
            signal = synthesize(
                Some(&signal),
                None,
                self.lengths[d - 1],
                &self.filters,
                self.boundary,
            );
        }
        Ok(signal)
    }

    pub fn reconstruct_bands(&self, exec: Execution) -> Result<SubseriesSet> {
        let bands: Vec<Result<Vec<f64>>> =
            par::map_range(exec, self.level + 1, |b| self.reconstruct_band(b));
        Ok(SubseriesSet {
            subseries: bands.into_iter().collect::<Result<_>>()?,
            leaf_order: "approximation-then-coarse-to-fine-details".into(),
        })
    }

    pub fn inverse(&self) -> Vec<f64> {
        let mut approx = self.bands[0].clone();
        for d in (1..=self.level).rev() {
            let detail = &self.bands[self.level + 1 - d];
            approx = synthesize(
                Some(&approx),
                Some(detail),
                self.lengths[d - 1],
                &self.filters,
                self.boundary,
            );
        }
        approx
    }
}

/// Undecimated (à trous) transform. `bands` = `[A_L, D_L, …, D_1]`, each of
/// the working length: `n` for periodic, `2n` for symmetric (the signal
/// followed by its mirror image).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwtCoefficients {
    pub level: usize,
    pub boundary: Boundary,
    pub filters: FilterPair,
    pub original_length: usize,
    pub bands: Vec<Vec<f64>>,
}

pub fn swt_decompose(
    series: &[f64],
    level: usize,
    filters: &FilterPair,
    boundary: Boundary,
) -> Result<SwtCoefficients> {
    validate(series, level)?;
    let mut approx: Vec<f64> = match boundary {
        Boundary::Periodic => series.to_vec(),
        Boundary::Symmetric => series
            .iter()
            .chain(series.iter().rev())
            .copied()
            .collect(),
    };
    let n = approx.len();
    let mut details = Vec::with_capacity(level);
    for j in 0..level {
        let stride = 1usize << j;
        let mut a = vec![0.0; n];
        let mut d = vec![0.0; n];
        for k in 0..n {
            let (mut sa, mut sd) = (0.0, 0.0);
            for (m, (h, g)) in filters.lowpass.iter().zip(&filters.highpass).enumerate() {
                let v = approx[(k + stride * m) % n];
                sa += h * v;
                sd += g * v;
            }
            a[k] = sa;
            d[k] = sd;
        }
        details.push(d);
        approx = a;
    }
    let mut bands = vec![approx];
    bands.extend(details.into_iter().rev());
    Ok(SwtCoefficients {
        level,
        boundary,
        filters: filters.clone(),
        original_length: series.len(),
        bands,
    })
}

impl SwtCoefficients {
    /// Band `b` restricted to the original samples.
    pub fn band(&self, b: usize) -> &[f64] {
        &self.bands[b][..self.original_length]
    }

    /// One inverse level: `a_{j−1} = ½(Hᵀa_j + Gᵀd_j)`.
    fn inverse_step(&self, approx: Option<&[f64]>, detail: Option<&[f64]>, j: usize) -> Vec<f64> {
        let n = self.bands[0].len();
        let stride = 1usize << j;
        let mut out = vec![0.0; n];
        for k in 0..n {
            let mut s = 0.0;
            for (m, (h, g)) in self
                .filters
                .lowpass
                .iter()
                .zip(&self.filters.highpass)
                .enumerate()
            {
                let idx = (k + n * self.filters.len() - (stride * m) % n) % n;
                if let Some(a) = approx {
                    s += h * a[idx];
                }
                if let Some(d) = detail {
                    s += g * d[idx];
                }
            }
            out[k] = 0.5 * s;
        }
        out
    }

    pub fn reconstruct_band(&self, b: usize) -> Result<Vec<f64>> {
        if self.bands.len() != self.level + 1 || b > self.level {
            return Err(WaveletError::CorruptTree(format!("no band {b}")));
        }
        // band b lives at level j (1-based) where detail D_j
        let top = if b == 0 { self.level } else { self.level + 1 - b };
        let mut signal = if b == 0 {
            self.inverse_step(Some(&self.bands[0]), None, top - 1)
        } else {
            self.inverse_step(None, Some(&self.bands[b]), top - 1)
        };
        for j in (1..top).rev() {
            signal = self.inverse_step(Some(&signal), None, j - 1);
        }
        signal.truncate(self.original_length);
        Ok(signal)
    }

    pub fn reconstruct_bands(&self, exec: Execution) -> Result<SubseriesSet> {
        let bands: Vec<Result<Vec<f64>>> =
            par::map_range(exec, self.level + 1, |b| self.reconstruct_band(b));
        Ok(SubseriesSet {
            subseries: bands.into_iter().collect::<Result<_>>()?,
            leaf_order: "approximation-then-coarse-to-fine-details".into(),
        })
    }

    pub fn inverse(&self) -> Vec<f64> {
        let mut approx = self.bands[0].clone();
        for j in (1..=self.level).rev() {
            let detail = &self.bands[self.level + 1 - j];
            approx = self.inverse_step(Some(&approx), Some(detail), j - 1);
        }
        approx.truncate(self.original_length);
        approx
    }
}
