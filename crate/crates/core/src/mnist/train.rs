use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::network_accuracy;
use super::idx::{Dataset, Split};
use crate::error::{ensure_len, Error, Result};
use crate::network::{logistic, Activation, Layer, NetworkDescription, NetworkTopology, WeightMatrix};

pub const INPUTS: usize = 784;
pub const HIDDEN: usize = 100;
pub const OUTPUTS: usize = 10;

/// Training objective over the 10 sigmoid outputs with one-hot targets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// Summed binary cross-entropy of the independent outputs.
    #[default]
    CrossEntropy,
    /// Summed squared error of the outputs.
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: Loss,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: Loss::CrossEntropy,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.1,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    #[serde(default)]
    pub loss: Loss,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Clean accuracy on the test split, in `[0, 1]`.
    pub test_accuracy: f64,
    /// Mean minibatch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainingMetadata {
    /// The configuration the model was trained with.
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed: self.seed,
        }
    }
}

/// A trained 784-100-10 network with standard sigmoids on both
/// non-input layers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: NetworkTopology,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    network: NetworkDescription,
    metadata: TrainingMetadata,
}

impl TrainedModel {
    pub fn new(network: NetworkTopology, metadata: TrainingMetadata) -> Result<Self> {
        check_architecture(&network)?;
        Ok(TrainedModel { network, metadata })
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ModelFile {
            network: NetworkDescription::from(&self.network),
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        Self::new(file.network.try_into()?, file.metadata)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

fn check_architecture(net: &NetworkTopology) -> Result<()> {
    net.validate()?;
    let widths: Vec<usize> = net.layers.iter().map(|l| l.width).collect();
    let plain = net.readout.is_none() && net.layers.iter().all(|l| l.ghosts == 0);
    let sigmoid = net.layers[1..]
        .iter()
        .all(|l| l.activation == Activation::STANDARD_SIGMOID);
    if widths != [INPUTS, HIDDEN, OUTPUTS] || !plain || !sigmoid {
        return Err(Error::InvalidArgument(format!(
            "model must be a plain {INPUTS}-{HIDDEN}-{OUTPUTS} sigmoid network, got widths {widths:?}"
        )));
    }
    Ok(())
}

/// Uniform Glorot initialisation.
fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-a..a))
}

fn sigmoid_rows(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(logistic)
}

/// Cross-entropy of independent sigmoid outputs, computed from logits.
fn bce_from_logits(z: &Array2<f64>, t: &Array2<f64>) -> f64 {
    let total: f64 = z
        .iter()
        .zip(t)
        .map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p())
        .sum();
    total / z.nrows() as f64
}

struct Param {
    w: Array2<f64>,
    b: Array1<f64>,
    vw: Array2<f64>,
    vb: Array1<f64>,
}

impl Param {
    fn new(w: Array2<f64>) -> Self {
        let (r, c) = w.dim();
        Param {
            w,
            b: Array1::zeros(r),
            vw: Array2::zeros((r, c)),
            vb: Array1::zeros(r),
        }
    }

    fn step(&mut self, gw: &Array2<f64>, gb: &Array1<f64>, cfg: &TrainConfig) {
        self.vw
            .zip_mut_with(gw, |v, &g| *v = cfg.momentum * *v - cfg.learning_rate * g);
        self.vb
            .zip_mut_with(gb, |v, &g| *v = cfg.momentum * *v - cfg.learning_rate * g);
        self.w += &self.vw;
        self.b += &self.vb;
    }

    fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).all(|v| v.is_finite())
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }
}

struct Gradients {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
}

/// Batch-mean loss and its gradient for inputs `x` and one-hot targets `t`.
fn backprop(hidden: &Param, output: &Param, x: &Array2<f64>, t: &Array2<f64>, kind: Loss) -> (f64, Gradients) {
    let h = sigmoid_rows(&hidden.forward(x));
    let z = output.forward(&h);
    let o = sigmoid_rows(&z);
    let loss = match kind {
        Loss::CrossEntropy => bce_from_logits(&z, t),
        Loss::SquaredError => (&o - t).mapv(|d| d * d).sum() / o.nrows() as f64,
    };

    let mut d2 = (&o - t) / x.nrows() as f64;
    if kind == Loss::SquaredError {
        d2.zip_mut_with(&o, |d, &o| *d *= 2.0 * o * (1.0 - o));
    }
    let mut d1 = d2.dot(&output.w);
    d1.zip_mut_with(&h, |d, &h| *d *= h * (1.0 - h));
    let g = Gradients {
        w1: d1.t().dot(x),
        b1: d1.sum_axis(Axis(0)),
        w2: d2.t().dot(&h),
        b2: d2.sum_axis(Axis(0)),
    };
    (loss, g)
}

/// Minibatch SGD with momentum on the configured loss. Deterministic for a
/// given seed. The clean accuracy on `test` is recorded in the metadata.
pub fn train(data: &Dataset, test: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.split != Split::Train || test.split != Split::Test {
        return Err(Error::InvalidArgument(
            "train needs the train split for fitting and the test split for scoring".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    ensure_len("training image width", INPUTS, data.width())?;
    ensure_len("test image width", INPUTS, test.width())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut hidden = Param::new(xavier(HIDDEN, INPUTS, &mut rng));
    let mut output = Param::new(xavier(OUTPUTS, HIDDEN, &mut rng));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.images.select(Axis(0), idx);
            let mut t = Array2::zeros((idx.len(), OUTPUTS));
            for (r, &i) in idx.iter().enumerate() {
                t[(r, data.labels[i] as usize)] = 1.0;
            }

            let (loss, g) = backprop(&hidden, &output, &x, &t, cfg.loss);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch, loss });
            }
            loss_sum += loss;
            batches += 1;

            output.step(&g.w2, &g.b2, cfg);
            hidden.step(&g.w1, &g.b1, cfg);
            if !(output.is_finite() && hidden.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    batch,
                    loss: f64::INFINITY,
                });
            }
        }
        epoch_losses.push(loss_sum / batches as f64);
    }

    let network = NetworkTopology::new(
        vec![
            Layer::linear(INPUTS),
            Layer::new(HIDDEN, Activation::STANDARD_SIGMOID).with_bias(hidden.b.to_vec()),
            Layer::new(OUTPUTS, Activation::STANDARD_SIGMOID).with_bias(output.b.to_vec()),
        ],
        vec![WeightMatrix::from_array(hidden.w), WeightMatrix::from_array(output.w)],
    )?;
    let test_accuracy = network_accuracy(&network, test)?;
    TrainedModel::new(
        network,
        TrainingMetadata {
            loss: cfg.loss,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
            momentum: cfg.momentum,
            seed: cfg.seed,
            test_accuracy,
            epoch_losses,
        },
    )
}
