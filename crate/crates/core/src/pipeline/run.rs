use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DataSource, Decomposition, EvalMode, ModelSpec, PipelineConfig};
use super::forecaster::{FittedModel, Forecaster, RecurrentForecaster};
use super::{stage, PipelineError, Result};
use crate::ingest::{self, CleanReport, Normalizer, TimeSeries};
use crate::neural::{derive_seed, window_supervise};
use crate::par::{self, Execution};
use crate::seasonal::{sam_deseasonalize, sam_fit_with, SeasonalModel};
use crate::stats::{self, adf_test, AdfResult, EvalReport, EvalRow, FailedEntry, Significance};
use crate::wavelet::{daubechies_filters, dwt_decompose, swt_decompose, wpd_decompose, FilterPair};

/// Cleaned, gap-filled observations with the stationarity check and split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub series: TimeSeries,
    pub values: Vec<f64>,
    pub clean_report: CleanReport,
    pub adf: AdfResult,
    /// Number of training slots; the test segment starts here.
    pub cut: usize,
}

impl Prepared {
    pub fn train(&self) -> &[f64] {
        &self.values[..self.cut]
    }

    pub fn test(&self) -> &[f64] {
        &self.values[self.cut..]
    }
}

/// Load, clean, fill, test for a unit root (warning only) and split.
pub fn prepare(config: &PipelineConfig) -> Result<Prepared> {
    let (series, clean_report) = match &config.data {
        DataSource::Csv { path, schema } => {
            let raw = ingest::parse_csv(path, schema).map_err(stage("ingest"))?;
            ingest::prepare(&raw, &config.clean).map_err(stage("ingest"))?
        }
        DataSource::Synthetic(mix) => {
            let (cleaned, report) = ingest::clean(&mix.series(), &config.clean).map_err(stage("ingest"))?;
            (ingest::fill_missing(&cleaned).map_err(stage("ingest"))?, report)
        }
    };
    let values = series.dense().map_err(stage("ingest"))?;
    let adf = adf_test(&values, config.adf_max_lag).map_err(stage("adf"))?;
    if !adf.rejects(Significance::FivePercent) {
        log::warn!(
            "ADF t = {:.4} does not reject a unit root at 5%; continuing",
            adf.t_statistic
        );
    }
    ingest::split(&series, config.train_fraction).map_err(stage("split"))?;
    let cut = ingest::split_index(values.len(), config.train_fraction).map_err(stage("split"))?;
    Ok(Prepared {
        series,
        values,
        clean_report,
        adf,
        cut,
    })
}

/// Split `signal` into additive components for `decomposition`.
pub fn decompose(
    signal: &[f64],
    decomposition: Decomposition,
    level: usize,
    filters: &FilterPair,
    config: &PipelineConfig,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    let boundary = config.boundary;
    let set = match decomposition {
        Decomposition::None | Decomposition::Sam => return Ok(vec![signal.to_vec()]),
        Decomposition::Dwt => dwt_decompose(signal, level, filters, boundary)
            .and_then(|c| c.reconstruct_bands(exec)),
        Decomposition::Swt => swt_decompose(signal, level, filters, boundary)
            .and_then(|c| c.reconstruct_bands(exec)),
        Decomposition::Wpd | Decomposition::WpdSam => {
            wpd_decompose(signal, level, filters, boundary).and_then(|t| t.reconstruct_nodes(exec))
        }
    }
    .map_err(stage("decompose"))?;
    Ok(set.subseries)
}

/// Summed components must reproduce the signal they came from.
fn check_reconstruction(signal: &[f64], components: &[Vec<f64>]) -> Result<()> {
    let scale = signal.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (t, v) in signal.iter().enumerate() {
        let sum: f64 = components.iter().map(|c| c[t]).sum();
        if (sum - v).abs() > 1e-8 * scale {
            return Err(PipelineError::Internal(format!(
                "components do not sum to the signal at slot {t}: {sum} vs {v}"
            )));
        }
    }
    Ok(())
}

/// One component model for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentModel {
    pub component: usize,
    pub horizon: usize,
    pub window: usize,
    pub seed: u64,
    pub fitted: FittedModel,
}

/// Everything fitted for one matrix entry. Depends on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEntry {
    pub model: String,
    pub spec: ModelSpec,
    pub cut: usize,
    pub normalizer: Normalizer,
    /// One per component when the entry uses seasonal adjustment.
    pub seasonal: Vec<SeasonalModel>,
    pub components: usize,
    pub models: Vec<ComponentModel>,
}

/// SHA-256 digests of the fitted artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHashes {
    pub normalizer: String,
    pub seasonal: String,
    pub models: String,
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("artifact serializes");
    hex::encode(Sha256::digest(&json))
}

impl FittedEntry {
    pub fn hashes(&self) -> ArtifactHashes {
        ArtifactHashes {
            normalizer: sha256_json(&self.normalizer),
            seasonal: sha256_json(&self.seasonal),
            models: sha256_json(&self.models),
        }
    }

    fn model_for(&self, component: usize, horizon: usize) -> Result<&ComponentModel> {
        self.models
            .iter()
            .find(|m| m.component == component && m.horizon == horizon)
            .ok_or_else(|| PipelineError::Internal(format!("no model for component {component}, horizon {horizon}")))
    }
}

fn filters_for(config: &PipelineConfig, spec: ModelSpec) -> Result<Option<FilterPair>> {
    match spec.decomposition {
        Decomposition::None | Decomposition::Sam => Ok(None),
        _ => daubechies_filters(config.wavelet_order)
            .map(Some)
            .map_err(stage("decompose")),
    }
}

fn components_of(
    signal: &[f64],
    spec: ModelSpec,
    filters: &Option<FilterPair>,
    config: &PipelineConfig,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    match filters {
        Some(f) => decompose(signal, spec.decomposition, config.wpd_level, f, config, exec),
        None => Ok(vec![signal.to_vec()]),
    }
}

fn forecaster_for(config: &PipelineConfig, spec: ModelSpec) -> RecurrentForecaster {
    let mut train = config.train.clone();
    train.directionality = spec.network;
    RecurrentForecaster { config: train }
}

/// Fit normalizer, seasonal indices and one model per (component, horizon)
/// using `values[..cut]` only.
pub fn fit_entry(
    values: &[f64],
    cut: usize,
    config: &PipelineConfig,
    spec: ModelSpec,
    forecaster: &dyn Forecaster,
    exec: Execution,
) -> Result<FittedEntry> {
    let train = &values[..cut];
    let normalizer = Normalizer::fit(train).map_err(stage("normalize"))?;
    let train_n = normalizer.apply(train);
    let filters = filters_for(config, spec)?;
    let components = components_of(&train_n, spec, &filters, config, exec)?;
    check_reconstruction(&train_n, &components)?;

    let mut seasonal = Vec::new();
    let mut series = components;
    if spec.decomposition.uses_sam() {
        for comp in series.iter_mut() {
            let model = sam_fit_with(comp, config.sam_period, 0, config.sam_method).map_err(stage("seasonal"))?;
            *comp = sam_deseasonalize(comp, &model, 0);
            seasonal.push(model);
        }
    }

    let tasks: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|k| config.horizons.iter().map(move |&h| (k, h)))
        .collect();
    let fitted = par::map(exec, &tasks, |&(k, h)| -> Result<ComponentModel> {
        let window = config.windows[&h];
        let data = window_supervise(&series[k], window, h).map_err(stage("window"))?;
        let seed = derive_seed(config.seed, k as u64, h as u64);
        let fitted = forecaster.fit(&data, seed).map_err(|e| PipelineError::Stage {
            stage: "train",
            message: format!("component {k}, horizon {h}: {e}"),
        })?;
        Ok(ComponentModel {
            component: k,
            horizon: h,
            window,
            seed,
            fitted,
        })
    });
    Ok(FittedEntry {
        model: spec.name(),
        spec,
        cut,
        normalizer,
        seasonal,
        components: series.len(),
        models: fitted.into_iter().collect::<Result<_>>()?,
    })
}

/// Forecasts of one entry in original units, per horizon, at `target_slots`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub target_slots: Vec<usize>,
    pub predictions: BTreeMap<usize, Vec<f64>>,
}

/// Combine per-component normalized forecasts at `slots`: re-add seasonal
/// indices, sum the components, undo the Z-score.
fn aggregate(fitted: &FittedEntry, per_component: &[Vec<f64>], slots: &[usize]) -> Result<Vec<f64>> {
    if per_component.iter().any(|p| p.len() != slots.len()) {
        return Err(PipelineError::Internal(
            "component forecasts are not aligned to the same timestamps".into(),
        ));
    }
    Ok(slots
        .iter()
        .enumerate()
        .map(|(j, &slot)| {
            let sum: f64 = per_component
                .iter()
                .enumerate()
                .map(|(k, p)| p[j] + fitted.seasonal.get(k).map_or(0.0, |m| m.index_at(slot)))
                .sum();
            fitted.normalizer.invert_one(sum)
        })
        .collect())
}

/// Segment mode: the test segment is decomposed as a whole, separately from
/// the training segment. The first windows of each component are seeded with
/// the last training values so every test slot gets a forecast.
pub fn forecast_segment(
    fitted: &FittedEntry,
    values: &[f64],
    config: &PipelineConfig,
    exec: Execution,
) -> Result<Forecast> {
    let cut = fitted.cut;
    let spec = fitted.spec;
    let filters = filters_for(config, spec)?;
    let train_n = fitted.normalizer.apply(&values[..cut]);
    let test_n = fitted.normalizer.apply(&values[cut..]);
    let train_c = components_of(&train_n, spec, &filters, config, exec)?;
    let test_c = components_of(&test_n, spec, &filters, config, exec)?;
    check_reconstruction(&test_n, &test_c)?;

    let joined: Vec<Vec<f64>> = train_c
        .iter()
        .zip(&test_c)
        .enumerate()
        .map(|(k, (tr, te))| match fitted.seasonal.get(k) {
            Some(m) => {
                let mut j = sam_deseasonalize(tr, m, 0);
                j.extend(sam_deseasonalize(te, m, cut));
                j
            }
            None => tr.iter().chain(te).copied().collect(),
        })
        .collect();

    let n_test = test_n.len();
    let slots: Vec<usize> = (cut..cut + n_test).collect();
    let mut predictions = BTreeMap::new();
    for &h in &config.horizons {
        let mut per_component = Vec::with_capacity(joined.len());
        for (k, series) in joined.iter().enumerate() {
            let cm = fitted.model_for(k, h)?;
            let w = cm.window;
            if cut + 1 < w + h {
                return Err(PipelineError::Stage {
                    stage: "forecast",
                    message: format!("training segment shorter than window {w} + horizon {h}"),
                });
            }
            let mut inputs = Vec::with_capacity(n_test * w);
            for &s in &slots {
                let end = s + 1 - h;
                inputs.extend_from_slice(&series[end - w..end]);
            }
            per_component.push(cm.fitted.predict(&inputs, w, exec).map_err(stage("forecast"))?);
        }
        predictions.insert(h, aggregate(fitted, &per_component, &slots)?);
    }
    Ok(Forecast {
        target_slots: slots,
        predictions,
    })
}

/// Causal mode: targets are every `stride`-th test slot. For target `s` and
/// horizon `h` the origin is `s − h`; only `values[..=origin]` is
/// normalized, decomposed and deseasonalized (expanding window) before the
/// already-trained models forecast.
pub fn forecast_causal(
    fitted: &FittedEntry,
    values: &[f64],
    config: &PipelineConfig,
    stride: usize,
    exec: Execution,
) -> Result<Forecast> {
    if stride == 0 {
        return Err(PipelineError::Config("stride must be at least 1".into()));
    }
    let cut = fitted.cut;
    let spec = fitted.spec;
    let filters = filters_for(config, spec)?;
    let slots: Vec<usize> = (cut..values.len()).step_by(stride).collect();
    let w_max = config.max_window();
    let h_max = *config.horizons.iter().max().unwrap_or(&1);
    if cut < w_max + h_max {
        return Err(PipelineError::Stage {
            stage: "forecast",
            message: "training segment shorter than the widest window plus horizon".into(),
        });
    }
    let origins: Vec<usize> = slots
        .iter()
        .flat_map(|&s| config.horizons.iter().map(move |&h| s - h))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // last w_max deseasonalized component values as seen from each origin
    let tails = par::map(exec, &origins, |&o| -> Result<Vec<Vec<f64>>> {
        let prefix = fitted.normalizer.apply(&values[..=o]);
        let comps = components_of(&prefix, spec, &filters, config, Execution::Sequential)?;
        Ok(comps
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let start = c.len() - w_max;
                match fitted.seasonal.get(k) {
                    Some(m) => sam_deseasonalize(&c[start..], m, start),
                    None => c[start..].to_vec(),
                }
            })
            .collect())
    });
    let tails: BTreeMap<usize, Vec<Vec<f64>>> = origins
        .into_iter()
        .zip(tails)
        .map(|(o, t)| t.map(|t| (o, t)))
        .collect::<Result<_>>()?;

    let mut predictions = BTreeMap::new();
    for &h in &config.horizons {
        let mut per_component = Vec::with_capacity(fitted.components);
        for k in 0..fitted.components {
            let cm = fitted.model_for(k, h)?;
            let w = cm.window;
            let mut inputs = Vec::with_capacity(slots.len() * w);
            for &s in &slots {
                inputs.extend_from_slice(&tails[&(s - h)][k][w_max - w..]);
            }
            per_component.push(cm.fitted.predict(&inputs, w, exec).map_err(stage("forecast"))?);
        }
        predictions.insert(h, aggregate(fitted, &per_component, &slots)?);
    }
    Ok(Forecast {
        target_slots: slots,
        predictions,
    })
}

/// Score a forecast against the cleaned observations, in original units.
pub fn score(model: &str, forecast: &Forecast, values: &[f64]) -> Result<Vec<EvalRow>> {
    let actual: Vec<f64> = forecast.target_slots.iter().map(|&s| values[s]).collect();
    forecast
        .predictions
        .iter()
        .map(|(&h, p)| {
            Ok(EvalRow {
                model: model.to_string(),
                horizon_h: h,
                mae: stats::mae(&actual, p).map_err(stage("evaluate"))?,
                rmse: stats::rmse(&actual, p).map_err(stage("evaluate"))?,
                r2: stats::r2(&actual, p).map_err(stage("evaluate"))?,
            })
        })
        .collect()
}

/// Fitted models and forecasts of one matrix entry.
#[derive(Debug, Clone)]
pub struct EntryRun {
    pub fitted: FittedEntry,
    pub forecast: Forecast,
}

/// Split, configuration and provenance of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub mode: EvalMode,
    pub causal_stride: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub crate_version: String,
    pub parallel_feature: bool,
    pub first_test_windows: String,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: PipelineConfig,
    pub prepared: Prepared,
    pub entries: Vec<EntryRun>,
    pub report: EvalReport,
    pub provenance: Provenance,
}

impl RunArtifacts {
    pub fn entry(&self, model: &str) -> Option<&EntryRun> {
        self.entries.iter().find(|e| e.fitted.model == model)
    }
}

/// Fit and evaluate one entry with an explicit forecaster.
pub fn run_entry(
    prepared: &Prepared,
    config: &PipelineConfig,
    spec: ModelSpec,
    forecaster: &dyn Forecaster,
    exec: Execution,
) -> Result<EntryRun> {
    let fitted = fit_entry(&prepared.values, prepared.cut, config, spec, forecaster, exec)?;
    let forecast = forecast(&fitted, &prepared.values, config, exec)?;
    Ok(EntryRun { fitted, forecast })
}

/// Fit (or take already fitted) entries, forecast in the configured mode
/// and score. Failures are recorded per entry.
fn run_matrix(config: &PipelineConfig, specs: &[ModelSpec]) -> Result<RunArtifacts> {
    config.validate()?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let exec = config.execution();
    let prepared = prepare(config)?;
    let mut specs = specs.to_vec();
    specs.sort_by_key(|s| s.name());
    specs.dedup();
    let outcomes = specs
        .into_iter()
        .map(|spec| {
            log::info!("fitting {spec}");
            let forecaster = forecaster_for(config, spec);
            (spec.name(), run_entry(&prepared, config, spec, &forecaster, exec))
        })
        .collect();
    assemble(config, prepared, outcomes, started_at)
}

/// Forecast and score previously fitted entries on the configured data.
pub fn evaluate_fitted(config: &PipelineConfig, fitted: Vec<FittedEntry>) -> Result<RunArtifacts> {
    config.validate()?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let exec = config.execution();
    let prepared = prepare(config)?;
    let outcomes = fitted
        .into_iter()
        .map(|f| {
            let name = f.model.clone();
            let run = if f.cut != prepared.cut {
                Err(PipelineError::Config(format!(
                    "{name} was fitted on {} training slots but the data splits at {}",
                    f.cut, prepared.cut
                )))
            } else {
                forecast(&f, &prepared.values, config, exec).map(|forecast| EntryRun { fitted: f, forecast })
            };
            (name, run)
        })
        .collect();
    assemble(config, prepared, outcomes, started_at)
}

fn forecast(fitted: &FittedEntry, values: &[f64], config: &PipelineConfig, exec: Execution) -> Result<Forecast> {
    match config.mode {
        EvalMode::Segment => forecast_segment(fitted, values, config, exec),
        EvalMode::Causal => forecast_causal(fitted, values, config, config.causal_stride, exec),
    }
}

fn assemble(
    config: &PipelineConfig,
    prepared: Prepared,
    outcomes: Vec<(String, Result<EntryRun>)>,
    started_at: String,
) -> Result<RunArtifacts> {
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (name, outcome) in outcomes {
        let scored = outcome.and_then(|run| score(&name, &run.forecast, &prepared.values).map(|r| (run, r)));
        match scored {
            Ok((run, r)) => {
                rows.extend(r);
                entries.push(run);
            }
            Err(e) => {
                log::error!("{name} failed: {e}");
                failed.push(FailedEntry {
                    model: name,
                    error: e.to_string(),
                });
            }
        }
    }
    let report = EvalReport::summarize_with_failures(rows, failed).map_err(stage("evaluate"))?;
    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.seed,
        mode: config.mode,
        causal_stride: (config.mode == EvalMode::Causal).then_some(config.causal_stride),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        parallel_feature: Execution::parallel_available(),
        first_test_windows: "seeded with the last training values of each component".into(),
    };
    Ok(RunArtifacts {
        config: config.clone(),
        prepared,
        entries,
        report,
        provenance,
    })
}

/// Fit every entry of the model matrix without forecasting.
pub fn fit_matrix(config: &PipelineConfig) -> Result<(Prepared, Vec<FittedEntry>)> {
    config.validate()?;
    let exec = config.execution();
    let prepared = prepare(config)?;
    let mut specs = config.models.clone();
    specs.sort_by_key(|s| s.name());
    specs.dedup();
    let fitted = specs
        .into_iter()
        .map(|spec| {
            log::info!("fitting {spec}");
            fit_entry(&prepared.values, prepared.cut, config, spec, &forecaster_for(config, spec), exec)
        })
        .collect::<Result<_>>()?;
    Ok((prepared, fitted))
}

/// The proposed WPD-SAM-BiLSTM model alone.
pub fn run_proposed(config: &PipelineConfig) -> Result<RunArtifacts> {
    run_matrix(config, &[ModelSpec::PROPOSED])
}

/// Every entry of the configured model matrix under one split, normalizer
/// and seed discipline. A failing entry is reported, not fatal.
pub fn run_benchmark(config: &PipelineConfig) -> Result<RunArtifacts> {
    if config.models.is_empty() {
        return Err(PipelineError::Config("model matrix is empty".into()));
    }
    run_matrix(config, &config.models)
}

/// Strict-causal evaluation of the model matrix at every `stride`-th test
/// slot.
pub fn walk_forward_eval(config: &PipelineConfig, stride: usize) -> Result<RunArtifacts> {
    if stride == 0 {
        return Err(PipelineError::Config("stride must be at least 1".into()));
    }
    let cfg = PipelineConfig {
        mode: EvalMode::Causal,
        causal_stride: stride,
        ..config.clone()
    };
    run_benchmark(&cfg)
}


/// Train and test segments of the normalized series, decomposed separately
/// as in segment mode.
#[derive(Debug, Clone)]
pub struct SegmentDecomposition {
    pub normalizer: Normalizer,
    pub filters: Option<FilterPair>,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
}

pub fn decompose_segments(
    prepared: &Prepared,
    config: &PipelineConfig,
    decomposition: Decomposition,
    exec: Execution,
) -> Result<SegmentDecomposition> {
    let spec = ModelSpec::new(decomposition, ModelSpec::PROPOSED.network);
    let normalizer = Normalizer::fit(prepared.train()).map_err(stage("normalize"))?;
    let filters = filters_for(config, spec)?;
    let train = components_of(&normalizer.apply(prepared.train()), spec, &filters, config, exec)?;
    let test = components_of(&normalizer.apply(prepared.test()), spec, &filters, config, exec)?;
    Ok(SegmentDecomposition {
        normalizer,
        filters,
        train,
        test,
    })
}
