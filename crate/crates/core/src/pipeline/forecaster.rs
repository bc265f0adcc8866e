use serde::{Deserialize, Serialize};

use crate::neural::{self, RecurrentModel, TrainConfig, WindowDataset};
use crate::par::Execution;

/// Fits one component model for one horizon.
pub trait Forecaster: Sync {
    fn fit(&self, data: &WindowDataset, seed: u64) -> neural::Result<FittedModel>;
}

/// A fitted component model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedModel {
    Recurrent {
        #[serde(with = "model_json")]
        model: RecurrentModel,
        history: Vec<f64>,
        final_loss: f64,
    },
    /// Repeats the last value of each window.
    Persistence,
}

impl FittedModel {
    pub fn predict(&self, inputs: &[f64], width: usize, exec: Execution) -> neural::Result<Vec<f64>> {
        match self {
            FittedModel::Recurrent { model, .. } => model.predict(inputs, width, exec),
            FittedModel::Persistence => {
                if width == 0 || inputs.len() % width != 0 {
                    return Err(neural::NeuralError::Shape("window width".into()));
                }
                Ok(inputs.chunks(width).map(|w| w[width - 1]).collect())
            }
        }
    }
}

/// The recurrent network trained with a shared configuration.
pub struct RecurrentForecaster {
    pub config: TrainConfig,
}

impl Forecaster for RecurrentForecaster {
    fn fit(&self, data: &WindowDataset, seed: u64) -> neural::Result<FittedModel> {
        let config = TrainConfig {
            seed,
            ..self.config.clone()
        };
        let out = neural::train(data, &config)?;
        Ok(FittedModel::Recurrent {
            model: out.model,
            history: out.history,
            final_loss: out.final_loss,
        })
    }
}

pub struct PersistenceForecaster;

impl Forecaster for PersistenceForecaster {
    fn fit(&self, _data: &WindowDataset, _seed: u64) -> neural::Result<FittedModel> {
        Ok(FittedModel::Persistence)
    }
}

mod model_json {
    use super::RecurrentModel;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &RecurrentModel, s: S) -> Result<S::Ok, S::Error> {
        let doc: serde_json::Value = serde_json::from_str(&m.to_json()).map_err(serde::ser::Error::custom)?;
        doc.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RecurrentModel, D::Error> {
        let doc = serde_json::Value::deserialize(d)?;
        RecurrentModel::from_json(&doc.to_string()).map_err(D::Error::custom)
    }
}
