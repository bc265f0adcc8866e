use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backprop::{loss_and_gradients, Loss};
use super::dataset::WindowDataset;
use super::model::{Directionality, RecurrentModel};
use super::{NeuralError, Result};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub hidden_units: usize,
    pub loss: Loss,
    pub directionality: Directionality,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 512,
            learning_rate: 1e-4,
            dropout: 0.0,
            hidden_units: 64,
            loss: Loss::Mae,
            directionality: Directionality::Bi,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(NeuralError::Config(msg.into()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.hidden_units == 0 {
            return bad("hidden_units must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: RecurrentModel,
    /// Mean mini-batch loss of each epoch.
    pub history: Vec<f64>,
    /// Loss of the final parameters over the whole dataset, without dropout.
    pub final_loss: f64,
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, model: &RecurrentModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, model: &mut RecurrentModel, grad: &RecurrentModel) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let grads = grad.slices();
        for (s, params) in model.slices_mut().into_iter().enumerate() {
            let (m, v) = (&mut self.m[s], &mut self.v[s]);
            for (k, p) in params.iter_mut().enumerate() {
                let g = grads[s][k];
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g;
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g * g;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

/// Train a fresh model on `data`. Deterministic in (seed, data, config).
pub fn train(data: &WindowDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = RecurrentModel::init(config.directionality, config.hidden_units, &mut rng);
    let mut adam = Adam::new(config.learning_rate, &model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let keep = 1.0 - config.dropout;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let (inputs, targets) = data.gather(idx);
            let mask = (config.dropout > 0.0).then(|| {
                DMatrix::from_fn(model.feature_len(), idx.len(), |_, _| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            });
            let (loss, grad) =
                loss_and_gradients(&model, &inputs, &targets, data.window, config.loss, mask.as_ref())
                    .map_err(|e| NeuralError::Diverged {
                        epoch,
                        batch: b,
                        detail: e.to_string(),
                    })?;
            adam.update(&mut model, &grad);
            if !model.is_finite() {
                return Err(NeuralError::Diverged {
                    epoch,
                    batch: b,
                    detail: "non-finite parameters after update".into(),
                });
            }
            total += loss * idx.len() as f64;
        }
        history.push(total / data.len() as f64);
    }

    let predictions = model.predict(&data.inputs, data.window, Execution::Sequential)?;
    let final_loss = config.loss.value(&predictions, &data.targets);
    Ok(TrainOutcome {
        model,
        history,
        final_loss,
    })
}

/// Independent per-task seed derived from a master seed and two task
/// coordinates, so results never depend on scheduling.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(master) ^ a) ^ b.rotate_left(32))
}
