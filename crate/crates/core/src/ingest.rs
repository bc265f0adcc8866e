//! Loading, hourly resampling, cleaning, gap filling, chronological split
//! and Z-score normalization of raw wind-speed observations.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Value the source data uses for an invalid reading.
pub const DEFAULT_SENTINEL: f64 = 999.9;
pub const DEFAULT_K_SIGMA: f64 = 3.0;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

const SENTINEL_TOLERANCE: f64 = 1e-9;
const TIMESTAMP_OUT_FORMAT: &str = "%Y-%m-%d %H:%M";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("required column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: unparseable timestamp `{value}`")]
    BadTimestamp { row: usize, value: String },
    #[error("series is empty")]
    Empty,
    #[error("every slot is missing")]
    AllMissing,
    #[error("series has {len} slots, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("train fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("fit segment has zero variance")]
    ZeroVariance,
    #[error("series still has {0} missing slots")]
    MissingValues(usize),
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// Column names of the input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp_column: String,
    pub value_column: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_column: "timestamp".into(),
            value_column: "wind_speed".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub timestamp: NaiveDateTime,
    /// `None` when the cell was empty or not a number.
    pub value: Option<f64>,
}

/// Parsed observations with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSeries {
    records: Vec<RawRecord>,
}

impl RawSeries {
    /// Sorts by timestamp; readings sharing an exact timestamp are averaged.
    pub fn new(mut records: Vec<RawRecord>) -> Self {
        records.sort_by_key(|r| r.timestamp);
        let mut merged: Vec<RawRecord> = Vec::with_capacity(records.len());
        let mut run: Vec<f64> = Vec::new();
        for rec in records {
            match merged.last_mut() {
                Some(last) if last.timestamp == rec.timestamp => {
                    if let Some(v) = rec.value {
                        run.push(v);
                    }
                    last.value = mean_of(&run);
                }
                _ => {
                    run.clear();
                    if let Some(v) = rec.value {
                        run.push(v);
                    }
                    merged.push(rec);
                }
            }
        }
        Self { records: merged }
    }

    pub fn records(&self) -> &[RawRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Hourly series: slot `i` is `start + i` hours. Missing slots carry `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    start: NaiveDateTime,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(start: NaiveDateTime, values: Vec<Option<f64>>) -> Self {
        Self { start, values }
    }

    pub fn from_values(start: NaiveDateTime, values: &[f64]) -> Self {
        Self::new(start, values.iter().copied().map(Some).collect())
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn timestamp(&self, slot: usize) -> NaiveDateTime {
        self.start + Duration::hours(slot as i64)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Values as plain floats; fails if any slot is missing.
    pub fn dense(&self) -> Result<Vec<f64>> {
        let missing = self.missing_count();
        if missing > 0 {
            return Err(IngestError::MissingValues(missing));
        }
        Ok(self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect())
    }

    /// Sub-series covering `range`, with the start shifted accordingly.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeries {
        TimeSeries {
            start: self.timestamp(range.start),
            values: self.values[range].to_vec(),
        }
    }

    /// Write as `timestamp,wind_speed`; missing slots are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp", "wind_speed"])?;
        for (i, v) in self.values.iter().enumerate() {
            let ts = self.timestamp(i).format(TIMESTAMP_OUT_FORMAT).to_string();
            let val = v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([ts, val])?;
        }
        w.flush().map_err(|e| IngestError::Io {
            path: PathBuf::from("<csv writer>"),
            source: e,
        })?;
        Ok(())
    }
}

/// Counts gathered by [`clean`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub n_total: usize,
    pub n_sentinel: usize,
    pub n_outliers: usize,
    pub n_gap_slots: usize,
    /// Slots that [`fill_missing`] has to fill: sentinels + outliers + gaps.
    pub n_filled: usize,
    pub missing_fraction: f64,
    /// Where the outlier rule ran relative to gap filling.
    pub outlier_stage: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub sentinel: f64,
    pub k_sigma: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            sentinel: DEFAULT_SENTINEL,
            k_sigma: DEFAULT_K_SIGMA,
        }
    }
}

/// Read a CSV with a header row into a [`RawSeries`].
pub fn parse_csv(path: &Path, schema: &CsvSchema) -> Result<RawSeries> {
    let mut file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut text = String::new();
    file.read_to_string(&mut text)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_csv_str(&text, schema)
}

pub fn parse_csv_str(text: &str, schema: &CsvSchema) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let ts_col = find(&schema.timestamp_column)?;
    let val_col = find(&schema.value_column)?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        // header is line 1
        let line = i + 2;
        let raw_ts = row.get(ts_col).unwrap_or("");
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| IngestError::BadTimestamp {
            row: line,
            value: raw_ts.to_string(),
        })?;
        let value = row
            .get(val_col)
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite());
        records.push(RawRecord { timestamp, value });
    }
    Ok(RawSeries::new(records))
}

/// Accepts ISO-8601 (with or without seconds, `T` or space separator, an
/// optional offset which is dropped) and bare dates.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    let s = s.trim();
    for fmt in FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_local());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

fn floor_hour(t: NaiveDateTime) -> NaiveDateTime {
    t.date()
        .and_hms_opt(t.hour(), 0, 0)
        .expect("hour of a valid timestamp is valid")
}

/// Put readings on a uniform hourly grid. Readings within one hour are
/// averaged; hours without a valid reading are missing.
pub fn resample_hourly(raw: &RawSeries) -> Result<TimeSeries> {
    let first = raw.records.first().ok_or(IngestError::Empty)?;
    let last = raw.records.last().ok_or(IngestError::Empty)?;
    let start = floor_hour(first.timestamp);
    let n_slots = (floor_hour(last.timestamp) - start).num_hours() as usize + 1;

    let mut buckets: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for rec in &raw.records {
        if let Some(v) = rec.value {
            let slot = (floor_hour(rec.timestamp) - start).num_hours() as usize;
            let e = buckets.entry(slot).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    let mut values = vec![None; n_slots];
    for (slot, (sum, count)) in buckets {
        values[slot] = Some(sum / count as f64);
    }
    Ok(TimeSeries { start, values })
}

/// Mark sentinel readings and global `k_sigma` outliers as missing.
///
/// Mean and population standard deviation come from the non-missing,
/// non-sentinel values of the whole series. Runs before gap filling.
pub fn clean(series: &TimeSeries, cfg: &CleanConfig) -> Result<(TimeSeries, CleanReport)> {
    let is_sentinel = |v: f64| (v - cfg.sentinel).abs() <= SENTINEL_TOLERANCE;
    let n_gap_slots = series.missing_count();

    let valid: Vec<f64> = series
        .values
        .iter()
        .flatten()
        .copied()
        .filter(|&v| !is_sentinel(v))
        .collect();
    let (mean, std) = mean_std(&valid);

    let mut n_sentinel = 0;
    let mut n_outliers = 0;
    let values: Vec<Option<f64>> = series
        .values
        .iter()
        .map(|slot| match *slot {
            None => None,
            Some(v) if is_sentinel(v) => {
                n_sentinel += 1;
                None
            }
            Some(v) if (v - mean).abs() > cfg.k_sigma * std => {
                n_outliers += 1;
                None
            }
            Some(v) => Some(v),
        })
        .collect();

    let n_total = values.len();
    let n_filled = n_sentinel + n_outliers + n_gap_slots;
    if n_filled == n_total {
        return Err(IngestError::AllMissing);
    }
    let report = CleanReport {
        n_total,
        n_sentinel,
        n_outliers,
        n_gap_slots,
        n_filled,
        missing_fraction: if n_total == 0 {
            0.0
        } else {
            n_filled as f64 / n_total as f64
        },
        outlier_stage: "before_fill".into(),
    };
    Ok((
        TimeSeries {
            start: series.start,
            values,
        },
        report,
    ))
}

/// Forward fill, then backward fill any leading gap.
pub fn fill_missing(series: &TimeSeries) -> Result<TimeSeries> {
    let first_valid = series
        .values
        .iter()
        .find_map(|v| *v)
        .ok_or(IngestError::AllMissing)?;
    let mut carry = first_valid;
    let values = series
        .values
        .iter()
        .map(|v| {
            if let Some(x) = v {
                carry = *x;
            }
            Some(carry)
        })
        .collect();
    Ok(TimeSeries {
        start: series.start,
        values,
    })
}

/// resample → clean → fill.
pub fn prepare(raw: &RawSeries, cfg: &CleanConfig) -> Result<(TimeSeries, CleanReport)> {
    let hourly = resample_hourly(raw)?;
    let (cleaned, report) = clean(&hourly, cfg)?;
    Ok((fill_missing(&cleaned)?, report))
}

/// Number of training slots for a chronological split of `n` slots.
pub fn split_index(n: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(IngestError::BadFraction(train_fraction));
    }
    // guards against 0.7 * 10 landing a hair under 7
    Ok((train_fraction * n as f64 + 1e-9).floor() as usize)
}

/// Chronological split: the first `⌊fraction·n⌋` slots train, the rest test.
pub fn split(series: &TimeSeries, train_fraction: f64) -> Result<(TimeSeries, TimeSeries)> {
    if series.len() < 10 {
        return Err(IngestError::TooShort {
            len: series.len(),
            min: 10,
        });
    }
    let cut = split_index(series.len(), train_fraction)?;
    Ok((series.slice(0..cut), series.slice(cut..series.len())))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-score transform fitted on the training segment only.
///
/// `std` is the population (divide-by-n) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Normalizer {
    pub fn fit(train: &[f64]) -> Result<Self> {
        if train.is_empty() {
            return Err(IngestError::Empty);
        }
        let (mean, std) = mean_std(train);
        if !(std.is_finite() && std > f64::EPSILON * mean.abs().max(1.0)) {
            return Err(IngestError::ZeroVariance);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.std + self.mean).collect()
    }

    pub fn invert_one(&self, value: f64) -> f64 {
        value * self.std + self.mean
    }
}
