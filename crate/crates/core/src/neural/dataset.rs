use super::{NeuralError, Result};

/// Sliding-window supervision pairs for direct h-step forecasting.
///
/// Windows are stored flat, row-major: window `i` occupies
/// `inputs[i*window .. (i+1)*window]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDataset {
    pub window: usize,
    pub horizon: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

/// `inputs[i] = series[i..i+W]`, `targets[i] = series[i+W-1+h]`.
pub fn window_supervise(series: &[f64], window: usize, horizon: usize) -> Result<WindowDataset> {
    if window == 0 || horizon == 0 {
        return Err(NeuralError::ZeroWindow);
    }
    let span = window + horizon - 1;
    if series.len() <= span {
        return Err(NeuralError::SeriesTooShort {
            len: series.len(),
            window,
            horizon,
        });
    }
    let count = series.len() - span;
    let mut inputs = Vec::with_capacity(count * window);
    for i in 0..count {
        inputs.extend_from_slice(&series[i..i + window]);
    }
    let targets = series[span..].to_vec();
    Ok(WindowDataset {
        window,
        horizon,
        inputs,
        targets,
    })
}

impl WindowDataset {
    pub fn from_parts(inputs: Vec<f64>, targets: Vec<f64>, window: usize, horizon: usize) -> Result<Self> {
        if window == 0 {
            return Err(NeuralError::ZeroWindow);
        }
        if inputs.len() != targets.len() * window {
            return Err(NeuralError::Shape(format!(
                "{} inputs do not form {} windows of width {window}",
                inputs.len(),
                targets.len()
            )));
        }
        Ok(WindowDataset {
            window,
            horizon,
            inputs,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.window..(i + 1) * self.window]
    }

    /// Gather the rows in `idx` into a new flat input buffer and target vector.
    pub fn gather(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut inputs = Vec::with_capacity(idx.len() * self.window);
        let mut targets = Vec::with_capacity(idx.len());
        for &i in idx {
            inputs.extend_from_slice(self.input(i));
            targets.push(self.targets[i]);
        }
        (inputs, targets)
    }
}

/// Window width used for each forecasting horizon.
pub fn default_window(horizon: usize) -> usize {
    3 * horizon
}
