//! The four-source noise model.
//!
//! A noisy neuron `i` of layer `n` emits
//!
//! ```text
//! y_i = sqrt(2 D_A^C) ξ^{C,A} + sqrt(2 D_A^U) ξ^{U,A}_i
//!     + x_i (1 + sqrt(2 D_M^C) ξ^{C,M}) (1 + sqrt(2 D_M^U) ξ^{U,M}_i)
//! ```
//!
//! where the correlated draws `ξ^C` are shared by every neuron of the layer
//! and the uncorrelated draws `ξ^U` are per neuron. All four sources are
//! independent standard normals, and correlated sources of different layers
//! are independent of each other.

use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::rng::{Coordinate, RngStream, CORRELATED_TAG};

/// Which layers receive noise. `None` means every layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerMask(Option<BTreeSet<usize>>);

impl LayerMask {
    pub fn all() -> Self {
        LayerMask(None)
    }

    pub fn only(layers: impl IntoIterator<Item = usize>) -> Self {
        LayerMask(Some(layers.into_iter().collect()))
    }

    pub fn none() -> Self {
        LayerMask(Some(BTreeSet::new()))
    }

    pub fn is_enabled(&self, layer: usize) -> bool {
        self.0.as_ref().is_none_or(|s| s.contains(&layer))
    }

    pub fn layers(&self) -> Option<&BTreeSet<usize>> {
        self.0.as_ref()
    }
}

/// Noise intensities `D` (half the variance of the injected Gaussian term).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(rename = "da_u", default)]
    pub additive_uncorrelated: f64,
    #[serde(rename = "da_c", default)]
    pub additive_correlated: f64,
    #[serde(rename = "dm_u", default)]
    pub multiplicative_uncorrelated: f64,
    #[serde(rename = "dm_c", default)]
    pub multiplicative_correlated: f64,
    #[serde(default)]
    pub layers: LayerMask,
}

impl NoiseSpec {
    pub fn new(da_u: f64, da_c: f64, dm_u: f64, dm_c: f64) -> Result<Self> {
        let spec = NoiseSpec {
            additive_uncorrelated: da_u,
            additive_correlated: da_c,
            multiplicative_uncorrelated: dm_u,
            multiplicative_correlated: dm_c,
            layers: LayerMask::all(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noiseless() -> Self {
        NoiseSpec::default()
    }

    pub fn additive(uncorrelated: f64, correlated: f64) -> Result<Self> {
        Self::new(uncorrelated, correlated, 0.0, 0.0)
    }

    pub fn multiplicative(uncorrelated: f64, correlated: f64) -> Result<Self> {
        Self::new(0.0, 0.0, uncorrelated, correlated)
    }

    pub fn on_layers(mut self, layers: impl IntoIterator<Item = usize>) -> Self {
        self.layers = LayerMask::only(layers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in self.intensities() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidNoise(format!(
                    "{name} must be a finite non-negative intensity, got {d}"
                )));
            }
        }
        Ok(())
    }

    fn intensities(&self) -> [(&'static str, f64); 4] {
        [
            ("da_u", self.additive_uncorrelated),
            ("da_c", self.additive_correlated),
            ("dm_u", self.multiplicative_uncorrelated),
            ("dm_c", self.multiplicative_correlated),
        ]
    }

    pub fn is_noiseless(&self) -> bool {
        self.intensities().iter().all(|(_, d)| *d == 0.0)
    }

    /// Intensities in effect for `layer`: all zero when the layer is masked off.
    pub fn for_layer(&self, layer: usize) -> LayerNoise {
        if self.layers.is_enabled(layer) {
            LayerNoise::from_spec(self)
        } else {
            LayerNoise::default()
        }
    }
}

/// Standard deviations `sqrt(2D)` of the four sources for one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LayerNoise {
    pub add_u: f64,
    pub add_c: f64,
    pub mul_u: f64,
    pub mul_c: f64,
}

impl LayerNoise {
    fn from_spec(s: &NoiseSpec) -> Self {
        LayerNoise {
            add_u: (2.0 * s.additive_uncorrelated).sqrt(),
            add_c: (2.0 * s.additive_correlated).sqrt(),
            mul_u: (2.0 * s.multiplicative_uncorrelated).sqrt(),
            mul_c: (2.0 * s.multiplicative_correlated).sqrt(),
        }
    }

    pub fn is_silent(&self) -> bool {
        self.add_u == 0.0 && self.add_c == 0.0 && self.mul_u == 0.0 && self.mul_c == 0.0
    }

    fn has_uncorrelated(&self) -> bool {
        self.add_u != 0.0 || self.mul_u != 0.0
    }

    #[inline]
    fn apply(&self, x: f64, corr: (f64, f64), unc: (f64, f64)) -> f64 {
        self.add_c * corr.0 + self.add_u * unc.0 + x * (1.0 + self.mul_c * corr.1) * (1.0 + self.mul_u * unc.1)
    }
}

/// Where in the simulation a layer's noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSite {
    pub layer: usize,
    pub trial: u32,
    pub timestep: u32,
}

/// Draws one noisy output vector for the noise-free layer output `x`.
pub fn sample_noisy_output(x: &[f64], spec: &NoiseSpec, rng: &RngStream, site: NoiseSite) -> Result<Vec<f64>> {
    spec.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "layer output contains a non-finite value".into(),
        ));
    }
    let noise = spec.for_layer(site.layer);
    if noise.is_silent() {
        return Ok(x.to_vec());
    }
    let coord = |neuron| Coordinate {
        layer: site.layer as u32,
        neuron,
        trial: site.trial,
        timestep: site.timestep,
    };
    let corr = rng.gaussian_pair(coord(CORRELATED_TAG));
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let unc = if noise.has_uncorrelated() {
                rng.gaussian_pair(coord(i as u32))
            } else {
                (0.0, 0.0)
            };
            noise.apply(xi, corr, unc)
        })
        .collect())
}

/// Applies a layer's noise to a batch in place. Row `r` uses
/// `(trial, timestep) = sites[r]`.
pub(crate) fn apply_noise_batch(
    batch: &mut Array2<f64>,
    layer: usize,
    spec: &NoiseSpec,
    rng: &RngStream,
    sites: &[(u32, u32)],
) {
    let noise = spec.for_layer(layer);
    if noise.is_silent() {
        return;
    }
    debug_assert_eq!(batch.nrows(), sites.len());
    let layer = layer as u32;
    for (mut row, &(trial, timestep)) in batch.rows_mut().into_iter().zip(sites) {
        let coord = |neuron| Coordinate {
            layer,
            neuron,
            trial,
            timestep,
        };
        let corr = rng.gaussian_pair(coord(CORRELATED_TAG));
        if noise.has_uncorrelated() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = noise.apply(*v, corr, rng.gaussian_pair(coord(i as u32)));
            }
        } else {
            for v in row.iter_mut() {
                *v = noise.apply(*v, corr, (0.0, 0.0));
            }
        }
    }
}

/// Per-neuron variance of a noisy output whose noise-free input has the
/// given mean and variance (independent of the noise). The mean is unchanged.
///
/// `Var[y] = 2(D_A^U + D_A^C) + (1 + 2D_M^U)(1 + 2D_M^C)(E²[x] + Var[x]) − E²[x]`
pub fn layer_noise_variance(mean_x: &[f64], var_x: &[f64], spec: &NoiseSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    ensure_len("variance vector", mean_x.len(), var_x.len())?;
    if var_x.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("variance must be non-negative".into()));
    }
    let additive = 2.0 * (spec.additive_uncorrelated + spec.additive_correlated);
    let gain = (1.0 + 2.0 * spec.multiplicative_uncorrelated) * (1.0 + 2.0 * spec.multiplicative_correlated);
    Ok(mean_x
        .iter()
        .zip(var_x)
        .map(|(m, v)| additive + gain * (m * m + v) - m * m)
        .collect())
}
