use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ModelSpec;
use super::run::{ArtifactHashes, FittedEntry, Provenance, RunArtifacts};
use super::{PipelineError, Result};
use crate::ingest::{CleanReport, Normalizer};
use crate::seasonal::SeasonalModel;
use crate::stats::{AdfResult, EvalReport};

#[derive(Serialize)]
struct SplitSummary {
    n_total: usize,
    n_train: usize,
    n_test: usize,
    train_start: String,
    test_start: String,
    test_end: String,
}

#[derive(Serialize)]
struct TrainingSummary {
    component: usize,
    horizon: usize,
    window: usize,
    seed: u64,
    final_loss: Option<f64>,
    epochs: usize,
}

#[derive(Serialize)]
struct EntrySummary<'a> {
    model: &'a str,
    components: usize,
    normalizer: &'a Normalizer,
    seasonal: &'a [SeasonalModel],
    hashes: ArtifactHashes,
    training: Vec<TrainingSummary>,
    models_file: String,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    provenance: &'a Provenance,
    config: &'a super::PipelineConfig,
    clean_report: &'a CleanReport,
    adf: &'a AdfResult,
    split: SplitSummary,
    entries: Vec<EntrySummary<'a>>,
    report: &'a EvalReport,
}

fn models_file(model: &str) -> String {
    format!("models/{model}.json")
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `report.csv`, `report.json`, `predictions_h{h}.csv` and the fitted
/// models under `out_dir`. Returns the paths written.
///
/// `predictions_h{h}.csv` holds the proposed model when it was run, else
/// the first model; every other model gets `predictions_h{h}_{model}.csv`.
pub fn emit_report(artifacts: &RunArtifacts, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PipelineError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir.join("models")).map_err(io(out_dir))?;
    let mut written = Vec::new();

    let csv_path = out_dir.join("report.csv");
    write(&csv_path, artifacts.report.to_csv().as_bytes())?;
    written.push(csv_path);

    let prepared = &artifacts.prepared;
    let series = &prepared.series;
    let doc = ReportDocument {
        provenance: &artifacts.provenance,
        config: &artifacts.config,
        clean_report: &prepared.clean_report,
        adf: &prepared.adf,
        split: SplitSummary {
            n_total: prepared.values.len(),
            n_train: prepared.cut,
            n_test: prepared.values.len() - prepared.cut,
            train_start: series.timestamp(0).to_string(),
            test_start: series.timestamp(prepared.cut).to_string(),
            test_end: series.timestamp(prepared.values.len() - 1).to_string(),
        },
        entries: artifacts
            .entries
            .iter()
            .map(|e| entry_summary(&e.fitted))
            .collect(),
        report: &artifacts.report,
    };
    let json_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&doc).map_err(|e| PipelineError::Internal(e.to_string()))?;
    write(&json_path, json.as_bytes())?;
    written.push(json_path);

    for entry in &artifacts.entries {
        let path = out_dir.join(models_file(&entry.fitted.model));
        let json = serde_json::to_string(&entry.fitted).map_err(|e| PipelineError::Internal(e.to_string()))?;
        write(&path, json.as_bytes())?;
        written.push(path);
    }

    let primary = artifacts
        .entry(&ModelSpec::PROPOSED.name())
        .or_else(|| artifacts.entries.first());
    for entry in &artifacts.entries {
        let is_primary = primary.is_some_and(|p| std::ptr::eq(p, entry));
        for (h, preds) in &entry.forecast.predictions {
            let name = if is_primary {
                format!("predictions_h{h}.csv")
            } else {
                format!("predictions_h{h}_{}.csv", entry.fitted.model)
            };
            let mut text = String::from("timestamp,actual,predicted\n");
            for (&slot, p) in entry.forecast.target_slots.iter().zip(preds) {
                let _ = writeln!(
                    text,
                    "{},{},{}",
                    series.timestamp(slot).format("%Y-%m-%d %H:%M"),
                    prepared.values[slot],
                    p
                );
            }
            let path = out_dir.join(name);
            write(&path, text.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

fn entry_summary(fitted: &FittedEntry) -> EntrySummary<'_> {
    EntrySummary {
        model: &fitted.model,
        components: fitted.components,
        normalizer: &fitted.normalizer,
        seasonal: &fitted.seasonal,
        hashes: fitted.hashes(),
        training: fitted
            .models
            .iter()
            .map(|m| {
                let (final_loss, epochs) = match &m.fitted {
                    super::FittedModel::Recurrent {
                        final_loss, history, ..
                    } => (Some(*final_loss), history.len()),
                    super::FittedModel::Persistence => (None, 0),
                };
                TrainingSummary {
                    component: m.component,
                    horizon: m.horizon,
                    window: m.window,
                    seed: m.seed,
                    final_loss,
                    epochs,
                }
            })
            .collect(),
        models_file: models_file(&fitted.model),
    }
}

/// Load a fitted entry written by [`emit_report`].
pub fn load_fitted(path: &Path) -> Result<FittedEntry> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Persist a fitted entry as JSON.
pub fn save_fitted(fitted: &FittedEntry, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let json = serde_json::to_string(fitted).map_err(|e| PipelineError::Internal(e.to_string()))?;
    write(path, json.as_bytes())
}
