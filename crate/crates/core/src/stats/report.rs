use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

/// Scores of one model at one horizon, in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub horizon_h: usize,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
}

/// Arithmetic means of a model's per-horizon rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub model: String,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedEntry {
    pub model: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    /// Sorted by (model, horizon).
    pub rows: Vec<EvalRow>,
    /// One per model, sorted by model.
    pub overall: Vec<Overall>,
    pub failed: Vec<FailedEntry>,
}

impl EvalReport {
    /// Sort rows and compute per-model overall averages.
    pub fn summarize(rows: Vec<EvalRow>) -> Result<EvalReport> {
        Self::summarize_with_failures(rows, Vec::new())
    }

    pub fn summarize_with_failures(
        mut rows: Vec<EvalRow>,
        mut failed: Vec<FailedEntry>,
    ) -> Result<EvalReport> {
        if rows.is_empty() && failed.is_empty() {
            return Err(StatsError::Empty);
        }
        rows.sort_by(|a, b| (&a.model, a.horizon_h).cmp(&(&b.model, b.horizon_h)));
        failed.sort_by(|a, b| a.model.cmp(&b.model));

        let mut groups: BTreeMap<&str, Vec<&EvalRow>> = BTreeMap::new();
        for row in &rows {
            groups.entry(row.model.as_str()).or_default().push(row);
        }
        let overall = groups
            .into_iter()
            .map(|(model, rs)| {
                let n = rs.len() as f64;
                Overall {
                    model: model.to_string(),
                    mae: rs.iter().map(|r| r.mae).sum::<f64>() / n,
                    rmse: rs.iter().map(|r| r.rmse).sum::<f64>() / n,
                    r2: rs.iter().map(|r| r.r2).sum::<f64>() / n,
                }
            })
            .collect();
        Ok(EvalReport {
            rows,
            overall,
            failed,
        })
    }

    pub fn row(&self, model: &str, horizon_h: usize) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.horizon_h == horizon_h)
    }

    pub fn overall_for(&self, model: &str) -> Option<&Overall> {
        self.overall.iter().find(|o| o.model == model)
    }

    /// `model,horizon_h,mae,rmse,r2`, each model's horizons followed by its
    /// `overall` row; failed models get a single `failed` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,horizon_h,mae,rmse,r2\n");
        let mut models: Vec<&str> = self
            .overall
            .iter()
            .map(|o| o.model.as_str())
            .chain(self.failed.iter().map(|f| f.model.as_str()))
            .collect();
        models.sort_unstable();
        models.dedup();
        for model in models {
            for r in self.rows.iter().filter(|r| r.model == model) {
                let _ = writeln!(out, "{},{},{},{},{}", r.model, r.horizon_h, r.mae, r.rmse, r.r2);
            }
            if let Some(o) = self.overall_for(model) {
                let _ = writeln!(out, "{},overall,{},{},{}", o.model, o.mae, o.rmse, o.r2);
            }
            if self.failed.iter().any(|f| f.model == model) {
                let _ = writeln!(out, "{model},failed,,,");
            }
        }
        out
    }

    /// RMSE ≥ MAE ≥ 0 and R² ≤ 1 on every row.
    pub fn invariants_hold(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.mae >= 0.0 && r.rmse + 1e-12 >= r.mae && r.r2 <= 1.0)
    }
}
