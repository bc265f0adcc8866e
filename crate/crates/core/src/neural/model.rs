use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NeuralError, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Directionality {
    Uni,
    #[default]
    Bi,
}

impl std::str::FromStr for Directionality {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uni" | "lstm" => Ok(Directionality::Uni),
            "bi" | "bilstm" => Ok(Directionality::Bi),
            other => Err(format!("unknown directionality `{other}`")),
        }
    }
}

/// Parameters of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, output, candidate: rows `k*H..(k+1)*H` belong to gate `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmBlock {
    /// 4H × input
    pub w: DMatrix<f64>,
    /// 4H × H
    pub u: DMatrix<f64>,
    /// 4H
    pub b: DVector<f64>,
}

impl LstmBlock {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmBlock {
            w: DMatrix::zeros(4 * hidden, input),
            u: DMatrix::zeros(4 * hidden, hidden),
            b: DVector::zeros(4 * hidden),
        }
    }

    fn uniform<R: Rng>(hidden: usize, input: usize, bound: f64, rng: &mut R) -> Self {
        let mut draw = || rng.random_range(-bound..=bound);
        LstmBlock {
            w: DMatrix::from_fn(4 * hidden, input, |_, _| draw()),
            u: DMatrix::from_fn(4 * hidden, hidden, |_, _| draw()),
            b: DVector::from_fn(4 * hidden, |_, _| draw()),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentModel {
    pub directionality: Directionality,
    pub hidden_units: usize,
    pub forward: LstmBlock,
    /// Present only for bidirectional models.
    pub backward: Option<LstmBlock>,
    /// H (uni) or 2H (bi) weights; forward features come first.
    pub head_w: DVector<f64>,
    pub head_b: f64,
}

/// Per-step activations kept for backpropagation.
pub(crate) struct StepCache {
    /// Gate activations after the nonlinearity, 4H × B.
    pub gates: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub tanh_c: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

impl RecurrentModel {
    pub fn zeros(directionality: Directionality, hidden: usize) -> Self {
        let features = match directionality {
            Directionality::Uni => hidden,
            Directionality::Bi => 2 * hidden,
        };
        RecurrentModel {
            directionality,
            hidden_units: hidden,
            forward: LstmBlock::zeros(hidden, 1),
            backward: (directionality == Directionality::Bi).then(|| LstmBlock::zeros(hidden, 1)),
            head_w: DVector::zeros(features),
            head_b: 0.0,
        }
    }

    /// Every parameter uniform in ±1/√hidden.
    pub fn init<R: Rng>(directionality: Directionality, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let forward = LstmBlock::uniform(hidden, 1, bound, rng);
        let backward =
            (directionality == Directionality::Bi).then(|| LstmBlock::uniform(hidden, 1, bound, rng));
        let features = if backward.is_some() { 2 * hidden } else { hidden };
        let head_w = DVector::from_fn(features, |_, _| rng.random_range(-bound..=bound));
        let head_b = rng.random_range(-bound..=bound);
        RecurrentModel {
            directionality,
            hidden_units: hidden,
            forward,
            backward,
            head_w,
            head_b,
        }
    }

    pub fn feature_len(&self) -> usize {
        self.head_w.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// All parameters as flat slices, in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(8);
        for block in std::iter::once(&self.forward).chain(self.backward.as_ref()) {
            out.push(block.w.as_slice());
            out.push(block.u.as_slice());
            out.push(block.b.as_slice());
        }
        out.push(self.head_w.as_slice());
        out.push(std::slice::from_ref(&self.head_b));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(8);
        for block in std::iter::once(&mut self.forward).chain(self.backward.as_mut()) {
            out.push(block.w.as_mut_slice());
            out.push(block.u.as_mut_slice());
            out.push(block.b.as_mut_slice());
        }
        out.push(self.head_w.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.head_b));
        out
    }

    /// Names matching [`RecurrentModel::slices`], for diagnostics.
    pub fn slice_names(&self) -> Vec<&'static str> {
        let mut out = vec!["forward.w", "forward.u", "forward.b"];
        if self.backward.is_some() {
            out.extend(["backward.w", "backward.u", "backward.b"]);
        }
        out.extend(["head.w", "head.b"]);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// The same architecture with the forward and backward blocks exchanged.
    pub fn swap_directions(&self) -> RecurrentModel {
        let mut out = self.clone();
        if let Some(back) = out.backward.as_mut() {
            std::mem::swap(&mut out.forward, back);
            let h = self.hidden_units;
            for k in 0..h {
                out.head_w[k] = self.head_w[h + k];
                out.head_w[h + k] = self.head_w[k];
            }
        }
        out
    }

    /// Pre-head features (F × B) for the flat row-major windows in `inputs`.
    pub fn features(&self, inputs: &[f64], width: usize) -> Result<DMatrix<f64>> {
        let batch = batch_size(inputs, width)?;
        Ok(self.features_cached(inputs, width, batch, false).0)
    }

    pub(crate) fn features_cached(
        &self,
        inputs: &[f64],
        width: usize,
        batch: usize,
        keep: bool,
    ) -> (DMatrix<f64>, Vec<Vec<StepCache>>) {
        let h = self.hidden_units;
        let mut feats = DMatrix::zeros(self.feature_len(), batch);
        let mut caches = Vec::new();
        let blocks = std::iter::once((&self.forward, false)).chain(self.backward.as_ref().map(|b| (b, true)));
        for (d, (block, reverse)) in blocks.enumerate() {
            let (last, cache) = run_direction(block, inputs, width, batch, reverse, keep);
            feats.rows_mut(d * h, h).copy_from(&last);
            if keep {
                caches.push(cache);
            }
        }
        (feats, caches)
    }

    pub(crate) fn head(&self, feats: &DMatrix<f64>) -> DVector<f64> {
        let mut out = feats.tr_mul(&self.head_w);
        out.add_scalar_mut(self.head_b);
        out
    }

    /// Prediction for a single window.
    pub fn forward_one(&self, window: &[f64]) -> Result<f64> {
        if window.is_empty() {
            return Err(NeuralError::Shape("empty window".into()));
        }
        Ok(self.predict(window, window.len(), Execution::Sequential)?[0])
    }

    /// Batched prediction over flat row-major windows of `width` values.
    /// No state is carried between windows.
    pub fn predict(&self, inputs: &[f64], width: usize, exec: Execution) -> Result<Vec<f64>> {
        let total = batch_size(inputs, width)?;
        if total == 0 {
            return Ok(Vec::new());
        }
        const CHUNK: usize = 1024;
        let chunks: Vec<&[f64]> = inputs.chunks(CHUNK * width).collect();
        let parts = par::map(exec, &chunks, |chunk| {
            let b = chunk.len() / width;
            let (feats, _) = self.features_cached(chunk, width, b, false);
            self.head(&feats).as_slice().to_vec()
        });
        Ok(parts.concat())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelDocument::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| NeuralError::Format(e.to_string()))?;
        doc.try_into()
    }
}

fn batch_size(inputs: &[f64], width: usize) -> Result<usize> {
    if width == 0 || inputs.len() % width != 0 {
        return Err(NeuralError::Shape(format!(
            "{} values do not split into windows of width {width}",
            inputs.len()
        )));
    }
    Ok(inputs.len() / width)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Unroll one direction over the batch. Returns the last hidden state
/// (H × B) and, when `keep` is set, the per-step caches in processing order.
fn run_direction(
    block: &LstmBlock,
    inputs: &[f64],
    width: usize,
    batch: usize,
    reverse: bool,
    keep: bool,
) -> (DMatrix<f64>, Vec<StepCache>) {
    let hid = block.hidden();
    let mut h = DMatrix::<f64>::zeros(hid, batch);
    let mut c = DMatrix::<f64>::zeros(hid, batch);
    let mut caches = Vec::with_capacity(if keep { width } else { 0 });
    let mut z = DMatrix::zeros(4 * hid, batch);
    for step in 0..width {
        let t = if reverse { width - 1 - step } else { step };
        z.gemm(1.0, &block.u, &h, 0.0);
        for col in 0..batch {
            let x = inputs[col * width + t];
            let mut zc = z.column_mut(col);
            for r in 0..4 * hid {
                zc[r] += block.w[(r, 0)] * x + block.b[r];
            }
        }
        let mut gates = z.clone();
        for col in 0..batch {
            let mut g = gates.column_mut(col);
            for r in 0..3 * hid {
                g[r] = sigmoid(g[r]);
            }
            for r in 3 * hid..4 * hid {
                g[r] = g[r].tanh();
            }
        }
        let mut tanh_c = DMatrix::zeros(hid, batch);
        for col in 0..batch {
            let g = gates.column(col);
            for k in 0..hid {
                let cell = g[hid + k] * c[(k, col)] + g[k] * g[3 * hid + k];
                c[(k, col)] = cell;
                let tc = cell.tanh();
                tanh_c[(k, col)] = tc;
                h[(k, col)] = g[2 * hid + k] * tc;
            }
        }
        if keep {
            caches.push(StepCache {
                gates,
                c: c.clone(),
                tanh_c,
                h: h.clone(),
            });
        }
    }
    (h, caches)
}

const FORMAT: &str = "windcast-recurrent";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    shape: [usize; 2],
    /// Row-major.
    data: Vec<f64>,
}

impl MatrixDoc {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        MatrixDoc {
            shape: [m.nrows(), m.ncols()],
            data: m.transpose().as_slice().to_vec(),
        }
    }

    fn to_matrix(&self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        if self.shape != [rows, cols] || self.data.len() != rows * cols {
            return Err(NeuralError::Format(format!(
                "{name}: expected shape [{rows}, {cols}], found {:?} with {} values",
                self.shape,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(rows, cols, &self.data))
    }
}

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    w: MatrixDoc,
    u: MatrixDoc,
    b: MatrixDoc,
}

impl BlockDoc {
    fn from_block(b: &LstmBlock) -> Self {
        BlockDoc {
            w: MatrixDoc::from_matrix(&b.w),
            u: MatrixDoc::from_matrix(&b.u),
            b: MatrixDoc::from_matrix(&DMatrix::from_column_slice(b.b.len(), 1, b.b.as_slice())),
        }
    }

    fn to_block(&self, name: &str, hidden: usize) -> Result<LstmBlock> {
        let b = self.b.to_matrix(&format!("{name}.b"), 4 * hidden, 1)?;
        Ok(LstmBlock {
            w: self.w.to_matrix(&format!("{name}.w"), 4 * hidden, 1)?,
            u: self.u.to_matrix(&format!("{name}.u"), 4 * hidden, hidden)?,
            b: DVector::from_column_slice(b.as_slice()),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    directionality: Directionality,
    hidden_units: usize,
    input_size: usize,
    gate_order: String,
    forward: BlockDoc,
    backward: Option<BlockDoc>,
    head_w: MatrixDoc,
    head_b: f64,
}

impl From<&RecurrentModel> for ModelDocument {
    fn from(m: &RecurrentModel) -> Self {
        ModelDocument {
            format: FORMAT.into(),
            version: VERSION,
            directionality: m.directionality,
            hidden_units: m.hidden_units,
            input_size: 1,
            gate_order: "ifog".into(),
            forward: BlockDoc::from_block(&m.forward),
            backward: m.backward.as_ref().map(BlockDoc::from_block),
            head_w: MatrixDoc::from_matrix(&DMatrix::from_column_slice(1, m.head_w.len(), m.head_w.as_slice())),
            head_b: m.head_b,
        }
    }
}

impl TryFrom<ModelDocument> for RecurrentModel {
    type Error = NeuralError;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.format != FORMAT || doc.version != VERSION {
            return Err(NeuralError::Format(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        if doc.input_size != 1 || doc.gate_order != "ifog" {
            return Err(NeuralError::Format("unsupported input size or gate order".into()));
        }
        let h = doc.hidden_units;
        let backward = match (doc.directionality, &doc.backward) {
            (Directionality::Bi, Some(b)) => Some(b.to_block("backward", h)?),
            (Directionality::Uni, None) => None,
            _ => return Err(NeuralError::Format("backward block does not match directionality".into())),
        };
        let features = if backward.is_some() { 2 * h } else { h };
        let head = doc.head_w.to_matrix("head_w", 1, features)?;
        let model = RecurrentModel {
            directionality: doc.directionality,
            hidden_units: h,
            forward: doc.forward.to_block("forward", h)?,
            backward,
            head_w: DVector::from_column_slice(head.as_slice()),
            head_b: doc.head_b,
        };
        if !model.is_finite() {
            return Err(NeuralError::Format("non-finite parameter".into()));
        }
        Ok(model)
    }
}
