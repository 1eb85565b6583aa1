use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use noisyfnn::analytics::matrix_with_stats;
use noisyfnn::network::{Activation, Layer, NetworkTopology, WeightMatrix};
use noisyfnn::{Error, Result};

use crate::config::default_activation;

/// Synthetic networks for the sweep experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// One linear input fanned out with unit weights to `width` neurons,
    /// summed into `outputs` linear neurons.
    ///
    /// Output weights are `weight` everywhere, or random with squared mean
    /// `mu2` and mean square `eta` when both are given. The default weight
    /// is `1 / width`.
    Fan {
        #[serde(default = "hundred")]
        width: usize,
        #[serde(default = "one")]
        outputs: usize,
        #[serde(default = "default_activation")]
        activation: Activation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    /// Dense layers of the given widths with weights uniform in
    /// `[-scale, scale] / sqrt(fan-in)`. The first layer is linear.
    Random {
        widths: Vec<usize>,
        #[serde(default = "default_activation")]
        activation: Activation,
        #[serde(default = "one_f")]
        scale: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn hundred() -> usize {
    100
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl Generator {
    pub fn build(&self) -> Result<NetworkTopology> {
        match self {
            Generator::Fan {
                width,
                outputs,
                activation,
                weight,
                mu2,
                eta,
                seed,
            } => {
                let out = match (weight, mu2, eta) {
                    (None, Some(mu2), Some(eta)) => matrix_with_stats(*outputs, *width, *mu2, *eta, *seed)?,
                    (w, None, None) => {
                        WeightMatrix::filled(*outputs, *width, w.unwrap_or(1.0 / (*width).max(1) as f64))
                    }
                    _ => {
                        return Err(Error::InvalidArgument(
                            "fan generator takes either `weight` or both `mu2` and `eta`".into(),
                        ))
                    }
                };
                NetworkTopology::dense(
                    &[1, *width, *outputs],
                    &[Activation::Linear, *activation, Activation::Linear],
                    vec![WeightMatrix::filled(*width, 1, 1.0), out],
                )
            }
            Generator::Random {
                widths,
                activation,
                scale,
                seed,
            } => {
                if widths.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "random generator needs at least 2 widths".into(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let weights = widths
                    .windows(2)
                    .map(|p| {
                        let a = scale / (p[0].max(1) as f64).sqrt();
                        WeightMatrix::from_fn(p[1], p[0], |_, _| rng.random_range(-a..=a))
                    })
                    .collect();
                let mut layers = vec![Layer::linear(widths[0])];
                layers.extend(widths[1..].iter().map(|&w| Layer::new(w, *activation)));
                NetworkTopology::new(layers, weights)
            }
        }
    }
}
