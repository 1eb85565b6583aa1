//! Network topology and the noise-free forward pass.
//!
//! A network is an ordered list of layers joined by dense weight matrices.
//! Matrices are stored target-row by source-column, so `weights[n][(i, j)]`
//! is the connection from neuron `j` of layer `n` to neuron `i` of layer
//! `n + 1`, and the pre-activation of layer `n + 1` is `W · y_n (+ bias)`.
//!
//! Two extensions beyond a plain feedforward stack exist to support the
//! mitigation transforms:
//!
//! * **Ghost neurons.** The trailing `ghosts` neurons of a layer receive no
//!   input and have a noise-free output of exactly zero. They only carry the
//!   layer's additive noise forward.
//! * **Readout.** An optional noiseless linear map applied to the final
//!   layer's outputs. Without one the network output is the final layer
//!   itself.

use std::fmt;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Neuron transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActivationRepr", into = "ActivationRepr")]
pub enum Activation {
    Linear,
    /// `1 / (1 + exp(-gain * (x - offset)))`
    Sigmoid {
        gain: f64,
        offset: f64,
    },
}

impl Activation {
    pub const STANDARD_SIGMOID: Activation = Activation::Sigmoid { gain: 1.0, offset: 0.0 };

    pub fn sigmoid(gain: f64, offset: f64) -> Self {
        Activation::Sigmoid { gain, offset }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Sigmoid { gain, offset } => logistic(gain * (x - offset)),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Sigmoid { gain, offset } => {
                let s = logistic(gain * (x - offset));
                gain * s * (1.0 - s)
            }
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Activation::Linear)
    }
}

#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    // Split by sign so exp never overflows.
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ActivationRepr {
    Linear,
    Sigmoid {
        #[serde(default = "one")]
        gain: f64,
        #[serde(default)]
        offset: f64,
    },
    StandardSigmoid,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<ActivationRepr> for Activation {
    type Error = String;

    fn try_from(r: ActivationRepr) -> Result<Self, String> {
        match r {
            ActivationRepr::Linear => Ok(Activation::Linear),
            ActivationRepr::StandardSigmoid => Ok(Activation::STANDARD_SIGMOID),
            ActivationRepr::Sigmoid { gain, offset } => {
                if gain.is_finite() && offset.is_finite() {
                    Ok(Activation::Sigmoid { gain, offset })
                } else {
                    Err("sigmoid gain and offset must be finite".into())
                }
            }
        }
    }
}

impl From<Activation> for ActivationRepr {
    fn from(a: Activation) -> Self {
        match a {
            Activation::Linear => ActivationRepr::Linear,
            Activation::Sigmoid { gain, offset } => ActivationRepr::Sigmoid { gain, offset },
        }
    }
}

/// Dense connection matrix, rows are target neurons and columns are sources.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(Array2<f64>);

impl WeightMatrix {
    /// Builds a `rows x cols` matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure_len("weight matrix data", rows * cols, data.len())?;
        if data.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "weight matrix contains a non-finite entry".into(),
            ));
        }
        let a = Array2::from_shape_vec((rows, cols), data).expect("length checked above");
        Ok(WeightMatrix(a))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension {
                context: "weight matrix row",
                expected: cols,
                actual: r.len(),
            });
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        WeightMatrix(Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)))
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        WeightMatrix(Array2::from_elem((rows, cols), value))
    }

    pub fn identity(n: usize) -> Self {
        WeightMatrix(Array2::eye(n))
    }

    pub fn from_array(a: Array2<f64>) -> Self {
        WeightMatrix(a)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    /// Sum of each row, i.e. the total weight arriving at each target.
    pub fn row_sums(&self) -> Vec<f64> {
        self.0.sum_axis(Axis(1)).to_vec()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_len("matrix-vector product", self.cols(), x.len())?;
        Ok(self.0.dot(&ArrayView1::from(x)).to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Total neuron count, including ghosts.
    pub width: usize,
    pub activation: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
    /// Number of trailing ghost neurons.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub ghosts: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl Layer {
    pub fn new(width: usize, activation: Activation) -> Self {
        Layer {
            width,
            activation,
            bias: None,
            ghosts: 0,
        }
    }

    pub fn linear(width: usize) -> Self {
        Self::new(width, Activation::Linear)
    }

    pub fn with_bias(mut self, bias: Vec<f64>) -> Self {
        self.bias = Some(bias);
        self
    }

    /// Neurons that carry signal (everything except ghosts).
    pub fn signal_width(&self) -> usize {
        self.width.saturating_sub(self.ghosts)
    }

    pub fn is_ghost(&self, neuron: usize) -> bool {
        neuron >= self.signal_width() && neuron < self.width
    }
}

/// A single dimensional or structural problem found by [`validate_topology`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub layer: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(n) => write!(f, "layer {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub layers: Vec<Layer>,
    /// `weights[n]` connects layer `n` to layer `n + 1`.
    pub weights: Vec<WeightMatrix>,
    /// Noiseless linear map applied to the final layer, if any.
    pub readout: Option<WeightMatrix>,
}

/// Activity of one layer during a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    /// Pre-activation. For the input layer this is the (ghost-padded) input.
    pub a: Vec<f64>,
    /// Noise-free post-activation.
    pub x: Vec<f64>,
    /// Output after noise. Equal to `x` in a noise-free pass.
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub states: Vec<LayerState>,
    pub output: Vec<f64>,
}

impl NetworkTopology {
    /// Builds a network and checks it.
    pub fn new(layers: Vec<Layer>, weights: Vec<WeightMatrix>) -> Result<Self> {
        let net = NetworkTopology {
            layers,
            weights,
            readout: None,
        };
        net.validate()?;
        Ok(net)
    }

    /// Dense network with the given widths and per-layer activations.
    pub fn dense(widths: &[usize], activations: &[Activation], weights: Vec<WeightMatrix>) -> Result<Self> {
        ensure_len("activation list", widths.len(), activations.len())?;
        let layers = widths
            .iter()
            .zip(activations)
            .map(|(&w, &a)| Layer::new(w, a))
            .collect();
        Self::new(layers, weights)
    }

    pub fn with_readout(mut self, readout: WeightMatrix) -> Result<Self> {
        self.readout = Some(readout);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate_topology(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(v))
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Length of the input vector (input-layer neurons minus ghosts).
    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, Layer::signal_width)
    }

    pub fn output_width(&self) -> usize {
        match &self.readout {
            Some(r) => r.rows(),
            None => self.layers.last().map_or(0, |l| l.width),
        }
    }

    pub fn last_layer(&self) -> usize {
        self.layers.len() - 1
    }

    /// The readout as an explicit matrix (identity when absent).
    pub fn readout_matrix(&self) -> WeightMatrix {
        match &self.readout {
            Some(r) => r.clone(),
            None => WeightMatrix::identity(self.layers[self.last_layer()].width),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let desc: NetworkDescription = serde_json::from_str(s)?;
        desc.try_into()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkDescription::from(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}

/// Returns every structural inconsistency in `net`; an empty list means valid.
pub fn validate_topology(net: &NetworkTopology) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |layer: Option<usize>, message: String| out.push(Violation { layer, message });

    if net.layers.len() < 2 {
        push(None, format!("fewer than 2 layers ({})", net.layers.len()));
    }
    if net.weights.len() != net.layers.len().saturating_sub(1) {
        push(
            None,
            format!(
                "{} weight matrices for {} layers (expected {})",
                net.weights.len(),
                net.layers.len(),
                net.layers.len().saturating_sub(1)
            ),
        );
    }
    for (n, layer) in net.layers.iter().enumerate() {
        if layer.width == 0 {
            push(Some(n), "zero width".into());
        }
        if layer.ghosts > layer.width {
            push(Some(n), format!("{} ghosts exceed width {}", layer.ghosts, layer.width));
        }
        if let Some(b) = &layer.bias {
            if b.len() != layer.width {
                push(
                    Some(n),
                    format!("bias length {} differs from width {}", b.len(), layer.width),
                );
            }
            if b.iter().any(|v| !v.is_finite()) {
                push(Some(n), "bias contains a non-finite entry".into());
            }
        }
    }
    for (n, w) in net.weights.iter().enumerate() {
        let (Some(src), Some(dst)) = (net.layers.get(n), net.layers.get(n + 1)) else {
            continue;
        };
        if w.rows() != dst.width || w.cols() != src.width {
            push(
                Some(n),
                format!(
                    "weight matrix is {}x{} but widths {}->{} need {}x{}",
                    w.rows(),
                    w.cols(),
                    src.width,
                    dst.width,
                    dst.width,
                    src.width
                ),
            );
        }
        if w.as_array().iter().any(|v| !v.is_finite()) {
            push(Some(n), "weight matrix contains a non-finite entry".into());
        }
    }
    if let (Some(r), Some(last)) = (&net.readout, net.layers.last()) {
        if r.cols() != last.width || r.rows() == 0 {
            push(
                Some(net.layers.len() - 1),
                format!(
                    "readout is {}x{} but the final layer has width {}",
                    r.rows(),
                    r.cols(),
                    last.width
                ),
            );
        }
    }
    out
}

/// Deterministic forward pass without any noise.
pub fn forward_noiseless(net: &NetworkTopology, input: &[f64]) -> Result<ForwardPass> {
    net.validate()?;
    ensure_len("network input", net.input_width(), input.len())?;

    let mut states = Vec::with_capacity(net.depth());
    let first = &net.layers[0];
    let mut a = input.to_vec();
    a.resize(first.width, 0.0);
    if let Some(b) = &first.bias {
        a.iter_mut().zip(b).for_each(|(v, b)| *v += b);
    }
    let mut x = activate(first, &a);
    states.push(LayerState {
        a,
        y: x.clone(),
        x: x.clone(),
    });

    for (n, w) in net.weights.iter().enumerate() {
        let layer = &net.layers[n + 1];
        // Same row-times-transpose product as the batch engine, so noiseless
        // batches reproduce this pass bit for bit.
        let row = ArrayView2::from_shape((1, x.len()), &x).expect("row view");
        let mut a = row.dot(&w.as_array().t()).into_raw_vec_and_offset().0;
        if let Some(b) = &layer.bias {
            a.iter_mut().zip(b).for_each(|(v, b)| *v += b);
        }
        x = activate(layer, &a);
        states.push(LayerState {
            a,
            y: x.clone(),
            x: x.clone(),
        });
    }

    let output = match &net.readout {
        Some(r) => {
            let row = ArrayView2::from_shape((1, x.len()), &x).expect("row view");
            row.dot(&r.as_array().t()).into_raw_vec_and_offset().0
        }
        None => x,
    };
    Ok(ForwardPass { states, output })
}

fn activate(layer: &Layer, a: &[f64]) -> Vec<f64> {
    let signal = layer.signal_width();
    a.iter()
        .enumerate()
        .map(|(i, &v)| if i < signal { layer.activation.apply(v) } else { 0.0 })
        .collect()
}

/// JSON form of a network: `weights` holds one flat row-major array per
/// adjacent layer pair, shaped `width[n+1] x width[n]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDescription {
    pub layers: Vec<Layer>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutDescription>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadoutDescription {
    pub rows: usize,
    pub data: Vec<f64>,
}

impl From<&NetworkTopology> for NetworkDescription {
    fn from(net: &NetworkTopology) -> Self {
        NetworkDescription {
            layers: net.layers.clone(),
            weights: net.weights.iter().map(WeightMatrix::to_row_major).collect(),
            readout: net.readout.as_ref().map(|r| ReadoutDescription {
                rows: r.rows(),
                data: r.to_row_major(),
            }),
        }
    }
}

impl TryFrom<NetworkDescription> for NetworkTopology {
    type Error = Error;

    fn try_from(desc: NetworkDescription) -> Result<Self> {
        let mut violations = Vec::new();
        let mut weights = Vec::with_capacity(desc.weights.len());
        for (n, flat) in desc.weights.into_iter().enumerate() {
            let (Some(src), Some(dst)) = (desc.layers.get(n), desc.layers.get(n + 1)) else {
                violations.push(Violation {
                    layer: Some(n),
                    message: "weight matrix without a matching layer pair".into(),
                });
                continue;
            };
            match WeightMatrix::from_row_major(dst.width, src.width, flat) {
                Ok(w) => weights.push(w),
                Err(e) => violations.push(Violation {
                    layer: Some(n),
                    message: e.to_string(),
                }),
            }
        }
        let readout = match desc.readout {
            None => None,
            Some(r) => {
                let cols = desc.layers.last().map_or(0, |l| l.width);
                match WeightMatrix::from_row_major(r.rows, cols, r.data) {
                    Ok(w) => Some(w),
                    Err(e) => {
                        violations.push(Violation {
                            layer: None,
                            message: format!("readout: {e}"),
                        });
                        None
                    }
                }
            }
        };
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        let net = NetworkTopology {
            layers: desc.layers,
            weights,
            readout,
        };
        net.validate()?;
        Ok(net)
    }
}

/// Applies `layer`'s activation to a batch (rows are samples), zeroing ghosts.
pub(crate) fn activate_batch(layer: &Layer, a: &mut Array2<f64>) {
    let signal = layer.signal_width();
    for mut row in a.rows_mut() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = if i < signal { layer.activation.apply(*v) } else { 0.0 };
        }
    }
}
