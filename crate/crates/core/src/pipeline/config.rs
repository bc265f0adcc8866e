use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, Result};
use crate::ingest::{CleanConfig, CsvSchema, DEFAULT_TRAIN_FRACTION};
use crate::neural::{Directionality, TrainConfig};
use crate::par::Execution;
use crate::seasonal::IndexMethod;
use crate::stats::MaxLag;
use crate::synthetic::SineMix;
use crate::wavelet::Boundary;

/// Where the observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Csv { path: PathBuf, schema: CsvSchema },
    Synthetic(SineMix),
}

/// Decomposition stage placed in front of the recurrent forecasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Decomposition {
    None,
    Dwt,
    Swt,
    Wpd,
    Sam,
    WpdSam,
}

impl Decomposition {
    pub const ALL: [Decomposition; 6] = [
        Decomposition::None,
        Decomposition::Dwt,
        Decomposition::Swt,
        Decomposition::Wpd,
        Decomposition::Sam,
        Decomposition::WpdSam,
    ];

    pub fn uses_sam(self) -> bool {
        matches!(self, Decomposition::Sam | Decomposition::WpdSam)
    }

    fn prefix(self) -> &'static str {
        match self {
            Decomposition::None => "",
            Decomposition::Dwt => "DWT-",
            Decomposition::Swt => "SWT-",
            Decomposition::Wpd => "WPD-",
            Decomposition::Sam => "SAM-",
            Decomposition::WpdSam => "WPD-SAM-",
        }
    }
}

/// One entry of the benchmark matrix, e.g. `WPD-SAM-BiLSTM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub decomposition: Decomposition,
    pub network: Directionality,
}

impl ModelSpec {
    pub const PROPOSED: ModelSpec = ModelSpec {
        decomposition: Decomposition::WpdSam,
        network: Directionality::Bi,
    };

    pub fn new(decomposition: Decomposition, network: Directionality) -> Self {
        ModelSpec {
            decomposition,
            network,
        }
    }

    pub fn full_matrix() -> Vec<ModelSpec> {
        [Directionality::Uni, Directionality::Bi]
            .iter()
            .flat_map(|&n| Decomposition::ALL.iter().map(move |&d| ModelSpec::new(d, n)))
            .collect()
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let net = match self.network {
            Directionality::Uni => "LSTM",
            Directionality::Bi => "BiLSTM",
        };
        write!(f, "{}{}", self.decomposition.prefix(), net)
    }
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        let (prefix, net) = if let Some(p) = upper.strip_suffix("BILSTM") {
            (p, Directionality::Bi)
        } else if let Some(p) = upper.strip_suffix("LSTM") {
            (p, Directionality::Uni)
        } else {
            return Err(format!("model `{s}` must end in LSTM or BiLSTM"));
        };
        let decomposition = match prefix {
            "" => Decomposition::None,
            "DWT-" => Decomposition::Dwt,
            "SWT-" => Decomposition::Swt,
            "WPD-" => Decomposition::Wpd,
            "SAM-" => Decomposition::Sam,
            "WPD-SAM-" => Decomposition::WpdSam,
            _ => return Err(format!("unknown decomposition in model `{s}`")),
        };
        Ok(ModelSpec::new(decomposition, net))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Train and test segments are decomposed independently.
    #[default]
    Segment,
    /// Walk-forward: every forecast origin re-decomposes only the data
    /// observed up to it.
    Causal,
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "segment" => Ok(EvalMode::Segment),
            "causal" => Ok(EvalMode::Causal),
            other => Err(format!("unknown mode `{other}` (expected segment or causal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub data: DataSource,
    pub clean: CleanConfig,
    pub adf_max_lag: MaxLag,
    pub train_fraction: f64,
    pub wavelet_order: usize,
    pub wpd_level: usize,
    pub boundary: Boundary,
    pub sam_period: usize,
    pub sam_method: IndexMethod,
    pub horizons: Vec<usize>,
    /// Window width per horizon.
    pub windows: BTreeMap<usize, usize>,
    pub train: TrainConfig,
    pub models: Vec<ModelSpec>,
    pub seed: u64,
    pub mode: EvalMode,
    pub causal_stride: usize,
    /// `None` defers to `WINDCAST_WORKERS`; `Some(0)` means every core.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: DataSource::Csv {
                path: PathBuf::from("al_jouf.csv"),
                schema: CsvSchema::default(),
            },
            clean: CleanConfig::default(),
            adf_max_lag: MaxLag::Auto,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            wavelet_order: 22,
            wpd_level: 3,
            boundary: Boundary::Symmetric,
            sam_period: 2192,
            sam_method: IndexMethod::Positional,
            horizons: vec![1, 3, 5],
            windows: BTreeMap::from([(1, 3), (3, 9), (5, 15)]),
            train: TrainConfig::default(),
            models: vec![ModelSpec::PROPOSED],
            seed: 0,
            mode: EvalMode::Segment,
            causal_stride: 1,
            workers: None,
        }
    }
}

impl PipelineConfig {
    /// Desk-scale configuration on the bundled synthetic series: two
    /// sinusoids (24 h and 548 h) plus AR(1) noise, seasonal period 1096 h.
    pub fn synthetic_reduced() -> Self {
        PipelineConfig {
            data: DataSource::Synthetic(SineMix::default()),
            sam_period: 1096,
            train: TrainConfig {
                epochs: 20,
                batch_size: 32,
                learning_rate: 1e-3,
                hidden_units: 16,
                ..TrainConfig::default()
            },
            models: vec![ModelSpec::PROPOSED, ModelSpec::new(Decomposition::None, Directionality::Bi)],
            ..PipelineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.horizons.is_empty() {
            return bad("at least one horizon is required".into());
        }
        for h in &self.horizons {
            match self.windows.get(h) {
                None => return bad(format!("horizon {h} has no window entry")),
                Some(0) => return bad(format!("window for horizon {h} must be positive")),
                Some(_) => {}
            }
            if *h == 0 {
                return bad("horizons must be positive".into());
            }
        }
        let mut seen = self.horizons.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.horizons.len() {
            return bad("duplicate horizon".into());
        }
        if self.models.is_empty() {
            return bad("model matrix is empty".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if self.wpd_level == 0 {
            return bad("wpd.level must be positive".into());
        }
        if self.wavelet_order == 0 || self.wavelet_order > crate::wavelet::MAX_ORDER {
            return bad(format!("wavelet.order must lie in 1..={}", crate::wavelet::MAX_ORDER));
        }
        if self.sam_period == 0 {
            return bad("sam.period must be positive".into());
        }
        if self.causal_stride == 0 {
            return bad("causal.stride must be at least 1".into());
        }
        self.train.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn execution(&self) -> Execution {
        match self.workers {
            Some(w) => Execution::from_workers(w),
            None => Execution::Auto,
        }
        .resolve()
    }

    /// SHA-256 of the canonical JSON form. Worker count is excluded since
    /// it never changes results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn max_window(&self) -> usize {
        self.horizons.iter().map(|h| self.windows[h]).max().unwrap_or(0)
    }

    /// Read a `key = value` file; relative data paths resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        if let DataSource::Csv { path: data, .. } = &mut cfg.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    /// Parse the flat `key = value` format. `#` starts a comment; unknown
    /// keys are errors. Keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut source: Option<String> = None;
        let mut path: Option<PathBuf> = None;
        let mut schema = CsvSchema::default();
        let mut synth = SineMix::default();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PipelineError::ConfigLine { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
                value
                    .parse()
                    .map_err(|_| format!("`{key}` expects a number, found `{value}`"))
            }
            let parsed: std::result::Result<(), String> = (|| {
                match key {
                    "data.source" => source = Some(value.to_string()),
                    "data.path" => path = Some(PathBuf::from(value)),
                    "data.timestamp_column" => schema.timestamp_column = value.to_string(),
                    "data.value_column" => schema.value_column = value.to_string(),
                    "ingest.sentinel" => cfg.clean.sentinel = num(key, value)?,
                    "ingest.k_sigma" => cfg.clean.k_sigma = num(key, value)?,
                    "adf.max_lag" => {
                        cfg.adf_max_lag = if value == "auto" {
                            MaxLag::Auto
                        } else {
                            MaxLag::Fixed(num(key, value)?)
                        }
                    }
                    "split.train_fraction" => cfg.train_fraction = num(key, value)?,
                    "wavelet.order" => cfg.wavelet_order = num(key, value)?,
                    "wavelet.boundary" => cfg.boundary = value.parse()?,
                    "wpd.level" => cfg.wpd_level = num(key, value)?,
                    "sam.period" => cfg.sam_period = num(key, value)?,
                    "sam.method" => cfg.sam_method = value.parse()?,
                    "horizons" => cfg.horizons = parse_list(key, value)?,
                    "windows" => cfg.windows = parse_windows(value)?,
                    "train.epochs" => cfg.train.epochs = num(key, value)?,
                    "train.batch_size" => cfg.train.batch_size = num(key, value)?,
                    "train.learning_rate" => cfg.train.learning_rate = num(key, value)?,
                    "train.dropout" => cfg.train.dropout = num(key, value)?,
                    "train.hidden_units" => cfg.train.hidden_units = num(key, value)?,
                    "train.loss" => cfg.train.loss = value.parse()?,
                    "models" => {
                        cfg.models = if value == "all" {
                            ModelSpec::full_matrix()
                        } else {
                            value
                                .split(',')
                                .map(|m| m.trim().parse())
                                .collect::<std::result::Result<_, _>>()?
                        }
                    }
                    "seed" => cfg.seed = num(key, value)?,
                    "mode" => cfg.mode = value.parse()?,
                    "causal.stride" => cfg.causal_stride = num(key, value)?,
                    "workers" => cfg.workers = Some(num(key, value)?),
                    "synthetic.n" => synth.n = num(key, value)?,
                    "synthetic.level" => synth.level = num(key, value)?,
                    "synthetic.fast_amplitude" => synth.fast_amplitude = num(key, value)?,
                    "synthetic.fast_period" => synth.fast_period = num(key, value)?,
                    "synthetic.slow_amplitude" => synth.slow_amplitude = num(key, value)?,
                    "synthetic.slow_period" => synth.slow_period = num(key, value)?,
                    "synthetic.ar_coefficient" => synth.ar_coefficient = num(key, value)?,
                    "synthetic.noise_std" => synth.noise_std = num(key, value)?,
                    "synthetic.seed" => synth.seed = num(key, value)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            parsed.map_err(err)?;
        }

        cfg.data = match source.as_deref() {
            Some("synthetic") => DataSource::Synthetic(synth),
            Some("csv") | None => DataSource::Csv {
                path: path.unwrap_or_else(|| PathBuf::from("al_jouf.csv")),
                schema,
            },
            Some(other) => {
                return Err(PipelineError::Config(format!(
                    "unknown data.source `{other}` (expected csv or synthetic)"
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`PipelineConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut lines = Vec::new();
        let mut kv = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        match &self.data {
            DataSource::Csv { path, schema } => {
                kv("data.source", "csv".into());
                kv("data.path", path.display().to_string());
                kv("data.timestamp_column", schema.timestamp_column.clone());
                kv("data.value_column", schema.value_column.clone());
            }
            DataSource::Synthetic(s) => {
                kv("data.source", "synthetic".into());
                kv("synthetic.n", s.n.to_string());
                kv("synthetic.level", s.level.to_string());
                kv("synthetic.fast_amplitude", s.fast_amplitude.to_string());
                kv("synthetic.fast_period", s.fast_period.to_string());
                kv("synthetic.slow_amplitude", s.slow_amplitude.to_string());
                kv("synthetic.slow_period", s.slow_period.to_string());
                kv("synthetic.ar_coefficient", s.ar_coefficient.to_string());
                kv("synthetic.noise_std", s.noise_std.to_string());
                kv("synthetic.seed", s.seed.to_string());
            }
        }
        kv("ingest.sentinel", self.clean.sentinel.to_string());
        kv("ingest.k_sigma", self.clean.k_sigma.to_string());
        kv(
            "adf.max_lag",
            match self.adf_max_lag {
                MaxLag::Auto => "auto".into(),
                MaxLag::Fixed(p) => p.to_string(),
            },
        );
        kv("split.train_fraction", self.train_fraction.to_string());
        kv("wavelet.order", self.wavelet_order.to_string());
        kv("wavelet.boundary", self.boundary.name().into());
        kv("wpd.level", self.wpd_level.to_string());
        kv("sam.period", self.sam_period.to_string());
        kv(
            "sam.method",
            match self.sam_method {
                IndexMethod::Positional => "positional".into(),
                IndexMethod::MovingAverage => "moving_average".into(),
            },
        );
        kv("horizons", join(self.horizons.iter()));
        kv(
            "windows",
            self.windows
                .iter()
                .map(|(h, w)| format!("{h}:{w}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("train.epochs", self.train.epochs.to_string());
        kv("train.batch_size", self.train.batch_size.to_string());
        kv("train.learning_rate", self.train.learning_rate.to_string());
        kv("train.dropout", self.train.dropout.to_string());
        kv("train.hidden_units", self.train.hidden_units.to_string());
        kv(
            "train.loss",
            match self.train.loss {
                crate::neural::Loss::Mae => "mae".into(),
                crate::neural::Loss::Mse => "mse".into(),
            },
        );
        kv("models", join(self.models.iter()));
        kv("seed", self.seed.to_string());
        kv(
            "mode",
            match self.mode {
                EvalMode::Segment => "segment".into(),
                EvalMode::Causal => "causal".into(),
            },
        );
        kv("causal.stride", self.causal_stride.to_string());
        if let Some(w) = self.workers {
            kv("workers", w.to_string());
        }
        lines.join("\n") + "\n"
    }
}

fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list(key: &str, value: &str) -> std::result::Result<Vec<usize>, String> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| format!("`{key}` expects a comma-separated list of counts"))
        })
        .collect()
}

/// `1:3,3:9,5:15`
fn parse_windows(value: &str) -> std::result::Result<BTreeMap<usize, usize>, String> {
    value
        .split(',')
        .map(|pair| {
            let (h, w) = pair
                .split_once(':')
                .ok_or_else(|| format!("window entry `{pair}` must look like h:W"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("window entry `{pair}` must hold two counts"))
            };
            Ok((parse(h)?, parse(w)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = PipelineConfig::default();
        assert_eq!((c.wavelet_order, c.wpd_level, c.sam_period), (22, 3, 2192));
        assert_eq!(c.train_fraction, 0.7);
        assert_eq!(c.horizons, vec![1, 3, 5]);
        assert_eq!(c.windows[&5], 15);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn parses_dotted_keys_and_comments() {
        let c = PipelineConfig::parse(
            "# demo\n\
             data.source = synthetic\n\
             synthetic.n = 3000   # shorter\n\
             wpd.level = 2\n\
             sam.period = 1096\n\
             train.learning_rate = 0.001\n\
             horizons = 1, 3\n\
             windows = 1:4,3:9\n\
             models = WPD-SAM-BiLSTM, lstm, SWT-LSTM\n\
             mode = causal\n",
        )
        .unwrap();
        assert_eq!(c.wpd_level, 2);
        assert_eq!(c.train.learning_rate, 1e-3);
        assert_eq!(c.horizons, vec![1, 3]);
        assert_eq!(c.windows[&1], 4);
        assert_eq!(c.models.len(), 3);
        assert_eq!(c.models[1].to_string(), "LSTM");
        assert_eq!(c.models[2].to_string(), "SWT-LSTM");
        assert_eq!(c.mode, EvalMode::Causal);
        match c.data {
            DataSource::Synthetic(s) => assert_eq!(s.n, 3000),
            _ => panic!("expected synthetic source"),
        }
    }

    #[test]
    fn unknown_key_is_an_error_with_line() {
        let e = PipelineConfig::parse("seed = 1\nwpd.levle = 3\n").unwrap_err();
        assert!(matches!(e, PipelineError::ConfigLine { line: 2, .. }), "{e}");
    }

    #[test]
    fn bad_values_are_errors() {
        for text in [
            "wpd.level = three",
            "horizons = 1,7",
            "models = WPD-GRU",
            "models = ",
            "causal.stride = 0",
            "mode = sideways",
            "windows = 1-3",
            "data.source = ftp",
        ] {
            assert!(PipelineConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn text_roundtrip() {
        for c in [PipelineConfig::default(), PipelineConfig::synthetic_reduced()] {
            let back = PipelineConfig::parse(&c.to_text()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn model_names_roundtrip() {
        let all = ModelSpec::full_matrix();
        assert_eq!(all.len(), 12);
        for m in all {
            assert_eq!(m.to_string().parse::<ModelSpec>().unwrap(), m);
        }
        assert_eq!(ModelSpec::PROPOSED.to_string(), "WPD-SAM-BiLSTM");
    }

    #[test]
    fn hash_ignores_workers_only() {
        let a = PipelineConfig::synthetic_reduced();
        let mut b = a.clone();
        b.workers = Some(4);
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
    }
}
