use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{LstmBlock, RecurrentModel, StepCache};
use super::{NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mae,
    Mse,
}

impl std::str::FromStr for Loss {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mae" => Ok(Loss::Mae),
            "mse" => Ok(Loss::Mse),
            other => Err(format!("unknown loss `{other}`")),
        }
    }
}

impl Loss {
    pub fn value(self, predictions: &[f64], targets: &[f64]) -> f64 {
        let n = targets.len() as f64;
        let per = predictions.iter().zip(targets).map(|(p, t)| match self {
            Loss::Mae => (p - t).abs(),
            Loss::Mse => (p - t) * (p - t),
        });
        per.sum::<f64>() / n
    }

    /// d loss / d prediction for one sample of a batch of `n`.
    fn derivative(self, residual: f64, n: f64) -> f64 {
        match self {
            // subgradient 0 at an exact fit
            Loss::Mae if residual == 0.0 => 0.0,
            Loss::Mae => residual.signum() / n,
            Loss::Mse => 2.0 * residual / n,
        }
    }
}

/// Batch loss and its gradient with respect to every parameter, by
/// backpropagation through time over all window steps and both directions.
///
/// `inputs` holds `targets.len()` windows of `width` values, row-major.
/// `dropout_mask`, when given, multiplies the F × B pre-head features
/// (already scaled for inverted dropout).
pub fn loss_and_gradients(
    model: &RecurrentModel,
    inputs: &[f64],
    targets: &[f64],
    width: usize,
    loss: Loss,
    dropout_mask: Option<&DMatrix<f64>>,
) -> Result<(f64, RecurrentModel)> {
    let batch = targets.len();
    if batch == 0 {
        return Err(NeuralError::EmptyBatch);
    }
    if width == 0 || inputs.len() != batch * width {
        return Err(NeuralError::Shape(format!(
            "{} inputs for {batch} targets of width {width}",
            inputs.len()
        )));
    }
    let (mut feats, caches) = model.features_cached(inputs, width, batch, true);
    if let Some(mask) = dropout_mask {
        if mask.shape() != feats.shape() {
            return Err(NeuralError::Shape("dropout mask shape".into()));
        }
        feats.component_mul_assign(mask);
    }
    let preds = model.head(&feats);
    let value = loss.value(preds.as_slice(), targets);
    if !value.is_finite() {
        return Err(NeuralError::NonFinite("loss".into()));
    }

    let n = batch as f64;
    let dy: Vec<f64> = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| loss.derivative(p - t, n))
        .collect();

    let mut grad = RecurrentModel::zeros(model.directionality, model.hidden_units);
    grad.head_b = dy.iter().sum();
    for (col, d) in dy.iter().enumerate() {
        grad.head_w.axpy(*d, &feats.column(col), 1.0);
    }

    // d loss / d features, F × B
    let mut dfeat = DMatrix::from_fn(model.feature_len(), batch, |r, c| model.head_w[r] * dy[c]);
    if let Some(mask) = dropout_mask {
        dfeat.component_mul_assign(mask);
    }

    let h = model.hidden_units;
    let blocks = std::iter::once((&model.forward, &mut grad.forward, false))
        .chain(model.backward.as_ref().zip(grad.backward.as_mut()).map(|(b, g)| (b, g, true)));
    for (d, (block, g, reverse)) in blocks.enumerate() {
        let dh_last = dfeat.rows(d * h, h).into_owned();
        backprop_direction(block, g, &caches[d], inputs, width, reverse, dh_last);
    }
    if !grad.is_finite() {
        return Err(NeuralError::NonFinite("gradient".into()));
    }
    Ok((value, grad))
}

fn backprop_direction(
    block: &LstmBlock,
    grad: &mut LstmBlock,
    caches: &[StepCache],
    inputs: &[f64],
    width: usize,
    reverse: bool,
    mut dh: DMatrix<f64>,
) {
    let hid = block.hidden();
    let batch = dh.ncols();
    let mut dc = DMatrix::<f64>::zeros(hid, batch);
    let mut dz = DMatrix::<f64>::zeros(4 * hid, batch);
    let zeros = DMatrix::<f64>::zeros(hid, batch);
    for s in (0..width).rev() {
        let t = if reverse { width - 1 - s } else { s };
        let cache = &caches[s];
        let (c_prev, h_prev) = if s > 0 {
            (&caches[s - 1].c, &caches[s - 1].h)
        } else {
            (&zeros, &zeros)
        };
        for col in 0..batch {
            let gates = cache.gates.column(col);
            for k in 0..hid {
                let (i, f, o, g) = (gates[k], gates[hid + k], gates[2 * hid + k], gates[3 * hid + k]);
                let tc = cache.tanh_c[(k, col)];
                let dhk = dh[(k, col)];
                let dck = dc[(k, col)] + dhk * o * (1.0 - tc * tc);
                dz[(k, col)] = dck * g * i * (1.0 - i);
                dz[(hid + k, col)] = dck * c_prev[(k, col)] * f * (1.0 - f);
                dz[(2 * hid + k, col)] = dhk * tc * o * (1.0 - o);
                dz[(3 * hid + k, col)] = dck * i * (1.0 - g * g);
                dc[(k, col)] = dck * f;
            }
        }
        for col in 0..batch {
            let x = inputs[col * width + t];
            grad.w.column_mut(0).axpy(x, &dz.column(col), 1.0);
            grad.b.axpy(1.0, &dz.column(col), 1.0);
        }
        grad.u.gemm(1.0, &dz, &h_prev.transpose(), 1.0);
        dh = block.u.tr_mul(&dz);
    }
}

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub checked: usize,
}

/// Compare every analytic gradient component against a central difference
/// with step `eps`. The relative error of a component is
/// `|a − n| / max(|a|, |n|, floor)`.
pub fn gradient_check(
    model: &RecurrentModel,
    inputs: &[f64],
    targets: &[f64],
    width: usize,
    loss: Loss,
    eps: f64,
    floor: f64,
) -> Result<GradientCheck> {
    let (_, grad) = loss_and_gradients(model, inputs, targets, width, loss, None)?;
    let analytic: Vec<Vec<f64>> = grad.slices().iter().map(|s| s.to_vec()).collect();
    let names = model.slice_names();
    let score = |m: &RecurrentModel| -> Result<f64> {
        let feats = m.features(inputs, width)?;
        Ok(loss.value(m.head(&feats).as_slice(), targets))
    };
    let mut probe = model.clone();
    let mut report = GradientCheck {
        max_relative_error: 0.0,
        worst_parameter: String::new(),
        checked: 0,
    };
    for (s, name) in names.iter().enumerate() {
        for k in 0..analytic[s].len() {
            let base = model.slices()[s][k];
            probe.slices_mut()[s][k] = base + eps;
            let up = score(&probe)?;
            probe.slices_mut()[s][k] = base - eps;
            let down = score(&probe)?;
            probe.slices_mut()[s][k] = base;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[s][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst_parameter = format!("{name}[{k}]");
            }
        }
    }
    Ok(report)
}
