//! Noise propagation and mitigation in physical feedforward neural networks.
//!
//! Neurons in analog hardware are noisy. This crate simulates that noise
//! (additive or multiplicative, correlated across a layer or independent per
//! neuron), predicts its propagation in closed form, and builds the topology
//! transforms that suppress it:
//!
//! * [`network`]: topology, JSON description and the noise-free forward pass
//! * [`noise`] and [`rng`]: the four-source noise model with counter-based,
//!   schedule-independent random draws
//! * [`analytics`]: matrix statistics `μ²(W)`, `η(W)` and variance propagation
//! * [`mitigation`]: ghost neurons, average pooling, and their combination
//! * [`sim`]: Monte Carlo trials, SNR estimation and sweeps
//! * [`mnist`]: IDX loading, training of a 784-100-10 sigmoid classifier and
//!   noisy evaluation
//!
//! ```
//! use noisyfnn::mitigation::{attach_ghost_direct, probe_layer};
//! use noisyfnn::network::Activation;
//! use noisyfnn::noise::NoiseSpec;
//! use noisyfnn::rng::RngStream;
//! use noisyfnn::sim::trial_moments;
//!
//! // 50 noisy sigmoid neurons; a ghost neuron cancels the correlated part.
//! let layer = probe_layer(50, Activation::sigmoid(7.0, 0.5));
//! let ghosted = attach_ghost_direct(&layer, 1).unwrap();
//! let spec = NoiseSpec::additive(1e-4, 1e-3).unwrap().on_layers([1]);
//! let report = trial_moments(&ghosted, &[0.5], &spec, 20_000, &RngStream::new(1), 0).unwrap();
//! let var = report.neurons[0].var;
//! assert!((var / 4e-4 - 1.0).abs() < 0.05);
//! ```

pub mod analytics;
pub mod error;
pub mod mitigation;
pub mod mnist;
pub mod network;
pub mod noise;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/noise-model.md")]
    mod noise_model {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/ghosts.md")]
    mod ghosts {}
    #[doc = include_str!("../../../book/src/pooling.md")]
    mod pooling {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/mnist.md")]
    mod mnist {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
