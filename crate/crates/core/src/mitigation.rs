//! Topology transforms that suppress noise: ghost neurons, average pooling,
//! and their combination.
//!
//! Every transform returns a new network whose noise-free output equals the
//! original's. Ghost neurons have a noise-free output of exactly zero, so
//! they contribute nothing but noise; pooled replicas share their incoming
//! weights and split the outgoing weights evenly, so the pool contributes the
//! same noise-free value as the neuron it replaces.
//!
//! # Ghost neurons
//!
//! A ghost in layer `n` is connected to every target of layer `n + 1` (or to
//! every readout channel when `n` is the final layer) with weight `g_i`:
//!
//! * [`GhostMode::Direct`] subtracts the ghost output from every neuron of
//!   layer `n` before propagation. Through `W` that is `g_i = -Σ_j W_ij`.
//! * [`GhostMode::Adaptive`] uses the same per-target weights
//!   `g_i = -Σ_j W_ij`, which cancel correlated additive noise exactly.
//!   On networks it coincides with `Direct`; the two names follow the two
//!   ways the construction is usually described.
//! * [`GhostMode::Weighted`] uses one fixed weight `W_g` for every target.
//!
//! # Pooling
//!
//! Pooling a layer by `m` replaces each neuron with `m` replicas that receive
//! the same input; the pool's output is the replicas' average. Uncorrelated
//! noise variance drops by `1/m`, correlated noise is untouched.
//!
//! When a pooled layer also gets a ghost, the ghost is pooled as well: `m`
//! ghost replicas whose average is subtracted from the pool averages. This
//! keeps the ghost's own uncorrelated noise at the pooled level `2D_A^U/m`.
//! Set [`GhostConfig::pooled`] to `false` for a single unpooled ghost.

use std::collections::BTreeSet;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Activation, Layer, NetworkTopology, WeightMatrix};
use crate::noise::NoiseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum GhostMode {
    Direct,
    Weighted { wg: f64 },
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostConfig {
    #[serde(flatten)]
    pub mode: GhostMode,
    /// Layers that receive a ghost. `None` means every non-input layer.
    #[serde(default)]
    pub layers: Option<BTreeSet<usize>>,
    /// Replicate the ghost along with a pooled layer.
    #[serde(default = "default_true")]
    pub pooled: bool,
}

fn default_true() -> bool {
    true
}

impl GhostConfig {
    pub fn new(mode: GhostMode) -> Self {
        GhostConfig {
            mode,
            layers: None,
            pooled: true,
        }
    }

    pub fn on_layers(mut self, layers: impl IntoIterator<Item = usize>) -> Self {
        self.layers = Some(layers.into_iter().collect());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub m: usize,
    /// Layers to pool. `None` means every non-input layer.
    #[serde(default)]
    pub layers: Option<BTreeSet<usize>>,
}

impl PoolConfig {
    pub fn new(m: usize) -> Self {
        PoolConfig { m, layers: None }
    }

    pub fn on_layers(mut self, layers: impl IntoIterator<Item = usize>) -> Self {
        self.layers = Some(layers.into_iter().collect());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MitigationPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ghost: Option<GhostConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PoolConfig>,
}

impl MitigationPlan {
    pub fn none() -> Self {
        MitigationPlan::default()
    }

    pub fn ghost(ghost: GhostConfig) -> Self {
        MitigationPlan {
            ghost: Some(ghost),
            pool: None,
        }
    }

    pub fn pool(pool: PoolConfig) -> Self {
        MitigationPlan {
            ghost: None,
            pool: Some(pool),
        }
    }

    pub fn combined(pool: PoolConfig, ghost: GhostConfig) -> Self {
        MitigationPlan {
            ghost: Some(ghost),
            pool: Some(pool),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ghost.is_none() && self.pool.is_none()
    }
}

fn resolve_layers(sel: &Option<BTreeSet<usize>>, depth: usize) -> BTreeSet<usize> {
    match sel {
        Some(s) => s.clone(),
        None => (1..depth).collect(),
    }
}

/// Per-target ghost weights `-Σ_j W_ij`.
pub fn adaptive_ghost_weights(w: &WeightMatrix) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidArgument(
            "adaptive ghost weights need a non-empty matrix".into(),
        ));
    }
    Ok(w.row_sums().into_iter().map(|s| -s).collect())
}

/// Variance of `Σ_j W_j y_j + W_g y_g` under additive noise, where the `y_j`
/// and the ghost share the correlated source:
/// `2D_A^U (Σ W_j² + W_g²) + 2D_A^C (Σ W_j + W_g)²`.
pub fn ghost_variance(w_row: &[f64], wg: f64, spec: &NoiseSpec) -> f64 {
    let sum: f64 = w_row.iter().sum();
    let sum_sq: f64 = w_row.iter().map(|w| w * w).sum();
    2.0 * spec.additive_uncorrelated * (sum_sq + wg * wg) + 2.0 * spec.additive_correlated * (sum + wg).powi(2)
}

/// Variance of `y_i - y_g` for a neuron with noise-free output `x`.
///
/// The correlated additive source cancels and the two uncorrelated additive
/// sources add, giving `4D_A^U`. A zero-output ghost carries no
/// multiplicative noise, so the neuron's own multiplicative noise remains.
pub fn ghost_direct_variance(x: f64, spec: &NoiseSpec) -> f64 {
    let mult = (1.0 + 2.0 * spec.multiplicative_uncorrelated) * (1.0 + 2.0 * spec.multiplicative_correlated) - 1.0;
    4.0 * spec.additive_uncorrelated + mult * x * x
}

/// Variance of a pool average given the single-neuron uncorrelated variance.
pub fn pooled_variance(var_single: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("pool size must be at least 1".into()));
    }
    if var_single < 0.0 {
        return Err(Error::InvalidArgument("variance must be non-negative".into()));
    }
    Ok(var_single / m as f64)
}

/// A network that exposes one layer's outputs: a linear input neuron fanned
/// out with unit weights to `width` neurons, read out directly.
pub fn probe_layer(width: usize, activation: Activation) -> NetworkTopology {
    NetworkTopology {
        layers: vec![Layer::linear(1), Layer::new(width, activation)],
        weights: vec![WeightMatrix::filled(width, 1, 1.0)],
        readout: None,
    }
}

fn check_layer(net: &NetworkTopology, layer: usize) -> Result<()> {
    if layer >= net.depth() {
        return Err(Error::InvalidPlan(format!(
            "layer {layer} is out of range for a {}-layer network",
            net.depth()
        )));
    }
    Ok(())
}

/// Adds a ghost whose output is subtracted from every neuron of `layer`.
pub fn attach_ghost_direct(net: &NetworkTopology, layer: usize) -> Result<NetworkTopology> {
    attach_ghost(net, layer, GhostMode::Direct, 1)
}

/// Adds a ghost connected to every target with weight `wg`.
pub fn attach_ghost_weighted(net: &NetworkTopology, layer: usize, wg: f64) -> Result<NetworkTopology> {
    attach_ghost(net, layer, GhostMode::Weighted { wg }, 1)
}

/// Adds a ghost with per-target weights `-Σ_j W_ij`.
pub fn attach_ghost_adaptive(net: &NetworkTopology, layer: usize) -> Result<NetworkTopology> {
    attach_ghost(net, layer, GhostMode::Adaptive, 1)
}

/// Adds `replicas` ghost neurons to `layer`. Their summed effect on target
/// `i` equals one ghost with weight `g_i`; each replica carries `g_i / replicas`.
pub fn attach_ghost(net: &NetworkTopology, layer: usize, mode: GhostMode, replicas: usize) -> Result<NetworkTopology> {
    net.validate()?;
    check_layer(net, layer)?;
    if replicas == 0 {
        return Err(Error::InvalidPlan("ghost replica count must be at least 1".into()));
    }
    if let GhostMode::Weighted { wg } = mode {
        if !wg.is_finite() {
            return Err(Error::InvalidPlan(format!("ghost weight must be finite, got {wg}")));
        }
    }
    if net.layers[layer].ghosts > 0 {
        return Err(Error::InvalidPlan(format!("layer {layer} already has ghost neurons")));
    }

    let mut out = net.clone();
    let old_width = net.layers[layer].width;
    {
        let l = &mut out.layers[layer];
        l.width += replicas;
        l.ghosts = replicas;
        if let Some(b) = &mut l.bias {
            b.extend(std::iter::repeat_n(0.0, replicas));
        }
    }
    // Ghosts receive no input.
    if layer > 0 {
        let w = net.weights[layer - 1].as_array();
        let mut grown = Array2::zeros((w.nrows() + replicas, w.ncols()));
        grown.slice_mut(s![..w.nrows(), ..]).assign(w);
        out.weights[layer - 1] = WeightMatrix::from_array(grown);
    }

    let outgoing = if layer < net.last_layer() {
        net.weights[layer].clone()
    } else {
        net.readout_matrix()
    };
    let per_target: Vec<f64> = match mode {
        GhostMode::Weighted { wg } => vec![wg; outgoing.rows()],
        GhostMode::Direct | GhostMode::Adaptive => adaptive_ghost_weights(&outgoing)?,
    };
    let o = outgoing.as_array();
    let mut grown = Array2::zeros((o.nrows(), old_width + replicas));
    grown.slice_mut(s![.., ..old_width]).assign(o);
    for (i, g) in per_target.iter().enumerate() {
        for r in 0..replicas {
            grown[(i, old_width + r)] = g / replicas as f64;
        }
    }
    if layer < net.last_layer() {
        out.weights[layer] = WeightMatrix::from_array(grown);
    } else {
        out.readout = Some(WeightMatrix::from_array(grown));
    }
    out.validate()?;
    Ok(out)
}

/// Replaces every neuron of the selected layers with `m` replicas whose
/// outputs are averaged.
pub fn build_pooled_network(net: &NetworkTopology, m: usize, layers: &BTreeSet<usize>) -> Result<NetworkTopology> {
    net.validate()?;
    if m == 0 {
        return Err(Error::InvalidPlan("pool size m must be at least 1".into()));
    }
    for &n in layers {
        check_layer(net, n)?;
        if n == 0 {
            return Err(Error::InvalidPlan("the input layer cannot be pooled".into()));
        }
        if net.layers[n].ghosts > 0 {
            return Err(Error::InvalidPlan(format!(
                "layer {n} has ghost neurons; pool before attaching ghosts"
            )));
        }
    }
    if m == 1 {
        return Ok(net.clone());
    }
    let mut out = net.clone();
    for &n in layers {
        let width = out.layers[n].width;
        let readout = out.readout_matrix();
        let l = &mut out.layers[n];
        l.width = width * m;
        if let Some(b) = &mut l.bias {
            *b = b.iter().flat_map(|&v| std::iter::repeat_n(v, m)).collect();
        }
        // Replica k of neuron i sits at i * m + k.
        let incoming = out.weights[n - 1].as_array();
        out.weights[n - 1] = WeightMatrix::from_fn(width * m, incoming.ncols(), |r, j| incoming[(r / m, j)]);

        let split = |w: &WeightMatrix| WeightMatrix::from_fn(w.rows(), width * m, |i, c| w.get(i, c / m) / m as f64);
        if n < out.last_layer() {
            out.weights[n] = split(&out.weights[n]);
        } else {
            out.readout = Some(split(&readout));
        }
    }
    out.validate()?;
    Ok(out)
}

/// Applies pooling first, then ghosts. A ghost on a pooled layer is itself
/// pooled unless [`GhostConfig::pooled`] is false.
pub fn apply_plan(net: &NetworkTopology, plan: &MitigationPlan) -> Result<NetworkTopology> {
    net.validate()?;
    let depth = net.depth();
    let mut out = net.clone();
    let mut pooled = BTreeSet::new();
    let mut m = 1;
    if let Some(pool) = &plan.pool {
        pooled = resolve_layers(&pool.layers, depth);
        m = pool.m;
        out = build_pooled_network(&out, m, &pooled)?;
    }
    if let Some(ghost) = &plan.ghost {
        for n in resolve_layers(&ghost.layers, depth) {
            check_layer(net, n)?;
            let replicas = if ghost.pooled && pooled.contains(&n) { m } else { 1 };
            out = attach_ghost(&out, n, ghost.mode, replicas)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::forward_noiseless;
    use crate::noise::NoiseSpec;
    use crate::rng::RngStream;
    use crate::sim::trial_moments;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fan(width: usize, out_weight: f64) -> NetworkTopology {
        NetworkTopology {
            layers: vec![
                Layer::linear(1),
                Layer::new(width, Activation::sigmoid(7.0, 0.5)),
                Layer::linear(1),
            ],
            weights: vec![
                WeightMatrix::filled(width, 1, 1.0),
                WeightMatrix::filled(1, width, out_weight),
            ],
            readout: None,
        }
    }

    fn random_net(rng: &mut ChaCha8Rng) -> NetworkTopology {
        let widths = [
            2,
            rng.random_range(1..6),
            rng.random_range(1..6),
            rng.random_range(1..4),
        ];
        let mut layers: Vec<Layer> = widths
            .iter()
            .map(|&w| Layer::new(w, Activation::sigmoid(rng.random_range(0.5..7.0), 0.2)))
            .collect();
        layers[0].activation = Activation::Linear;
        layers[1].bias = Some((0..widths[1]).map(|_| rng.random_range(-0.5..0.5)).collect());
        let weights = widths
            .windows(2)
            .map(|p| WeightMatrix::from_fn(p[1], p[0], |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        NetworkTopology {
            layers,
            weights,
            readout: None,
        }
    }

    #[test]
    fn adaptive_weights_are_negated_row_sums() {
        let w = WeightMatrix::filled(3, 4, 0.25);
        assert_eq!(adaptive_ghost_weights(&w).unwrap(), vec![-1.0; 3]);
        assert_eq!(
            adaptive_ghost_weights(&WeightMatrix::filled(2, 5, 0.0)).unwrap(),
            vec![-0.0; 2]
        );

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = WeightMatrix::from_fn(5, 7, |_, _| rng.random_range(-2.0..2.0));
        let got = adaptive_ghost_weights(&w).unwrap();
        for (i, g) in got.iter().enumerate() {
            let mut sum = 0.0;
            for j in 0..7 {
                sum += w.get(i, j);
            }
            assert!((g + sum).abs() < 1e-12);
        }
    }

    #[test]
    fn ghost_variance_cases() {
        let spec = NoiseSpec::additive(1e-4, 1e-3).unwrap();
        let row = vec![0.01; 100];
        assert!((ghost_variance(&row, -1.0, &spec) - 2.02e-4).abs() < 1e-15);
        // No ghost: 2D_A^U/I + 2D_A^C.
        assert!((ghost_variance(&row, 0.0, &spec) - (2e-6 + 2e-3)).abs() < 1e-15);
        let row: Vec<f64> = (0..20).map(|j| 0.01 * j as f64).collect();
        let wg = -row.iter().sum::<f64>();
        let unc_only = NoiseSpec::additive(1e-4, 0.0).unwrap();
        assert!((ghost_variance(&row, wg, &spec) - ghost_variance(&row, wg, &unc_only)).abs() < 1e-18);
    }

    #[test]
    fn direct_ghost_predictions() {
        assert!((ghost_direct_variance(0.7, &NoiseSpec::additive(1e-4, 0.0).unwrap()) - 4e-4).abs() < 1e-18);
        assert_eq!(
            ghost_direct_variance(0.7, &NoiseSpec::additive(0.0, 1e-3).unwrap()),
            0.0
        );
    }

    #[test]
    fn direct_ghost_monte_carlo() {
        let spec = NoiseSpec::additive(1e-4, 1e-3).unwrap().on_layers([1]);
        let net = attach_ghost_direct(&probe_layer(10, Activation::sigmoid(7.0, 0.5)), 1).unwrap();
        let r = trial_moments(&net, &[0.4], &spec, 1_000_000, &RngStream::new(4), 0).unwrap();
        for n in &r.neurons {
            assert!((n.var / 4e-4 - 1.0).abs() < 0.02, "var {}", n.var);
        }
    }

    #[test]
    fn ghost_multiplicative_noise_is_zero() {
        let spec = NoiseSpec::multiplicative(1e-3, 1e-3).unwrap().on_layers([1]);
        let base = probe_layer(3, Activation::Linear);
        let with = attach_ghost_direct(&base, 1).unwrap();
        let a = trial_moments(&base, &[0.5], &spec, 20_000, &RngStream::new(1), 0).unwrap();
        let b = trial_moments(&with, &[0.5], &spec, 20_000, &RngStream::new(1), 0).unwrap();
        for (x, y) in a.neurons.iter().zip(&b.neurons) {
            assert_eq!(x.var.to_bits(), y.var.to_bits());
        }
    }

    #[test]
    fn weighted_ghost_matches_formula() {
        let spec = NoiseSpec::additive(1e-4, 1e-3).unwrap().on_layers([1]);
        for wg in [0.0, -0.5, -1.0, -2.0] {
            let net = attach_ghost_weighted(&fan(100, 0.01), 1, wg).unwrap();
            let r = trial_moments(&net, &[0.3], &spec, 1_000_000, &RngStream::new(8), 0).unwrap();
            let expected = ghost_variance(&[0.01; 100], wg, &spec);
            assert!((r.neurons[0].var / expected - 1.0).abs() < 0.02, "wg {wg}");
        }
    }

    #[test]
    fn zero_weight_ghost_leaves_distribution_unchanged() {
        let spec = NoiseSpec::new(1e-4, 1e-3, 1e-3, 1e-4).unwrap();
        let base = fan(20, 0.05);
        let with = attach_ghost_weighted(&base, 1, 0.0).unwrap();
        let a = crate::sim::run_trials(&base, &[0.6], &spec, 500, 3).unwrap();
        let b = crate::sim::run_trials(&with, &[0.6], &spec, 500, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_layer_is_rejected() {
        assert!(matches!(
            attach_ghost_weighted(&fan(4, 0.25), 3, -1.0),
            Err(Error::InvalidPlan(_))
        ));
        assert!(attach_ghost_direct(&attach_ghost_direct(&fan(4, 0.25), 1).unwrap(), 1).is_err());
    }

    #[test]
    fn pooling_shapes() {
        let base = fan(100, 0.01);
        assert_eq!(build_pooled_network(&base, 1, &BTreeSet::from([1])).unwrap(), base);
        let pooled = build_pooled_network(&base, 3, &BTreeSet::from([1])).unwrap();
        assert_eq!(pooled.layers[1].width, 300);
        for u in [0.0, 0.3, 0.9] {
            let a = forward_noiseless(&base, &[u]).unwrap().output[0];
            let b = forward_noiseless(&pooled, &[u]).unwrap().output[0];
            assert!((a - b).abs() < 1e-12);
        }
        assert!(build_pooled_network(&base, 0, &BTreeSet::from([1])).is_err());
        assert!(build_pooled_network(&base, 2, &BTreeSet::from([0])).is_err());
    }

    #[test]
    fn pooled_variance_formula() {
        assert!((pooled_variance(2e-4, 4).unwrap() - 5e-5).abs() < 1e-20);
        assert_eq!(pooled_variance(3e-4, 1).unwrap(), 3e-4);
        assert!(pooled_variance(1.0, 0).is_err());
        let snr_gain = (2e-4 / pooled_variance(2e-4, 4).unwrap()).sqrt();
        assert!((snr_gain - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pooling_monte_carlo_matches_formula() {
        let spec = NoiseSpec::new(1e-4, 0.0, 1e-3, 0.0).unwrap().on_layers([1]);
        let base = probe_layer(5, Activation::sigmoid(7.0, 0.5));
        let pooled = build_pooled_network(&base, 4, &BTreeSet::from([1])).unwrap();
        let u = 0.6;
        let e = Activation::sigmoid(7.0, 0.5).apply(u);
        let r = trial_moments(&pooled, &[u], &spec, 400_000, &RngStream::new(2), 0).unwrap();
        let expected = (2e-4 + 2e-3 * e * e) / 4.0;
        for n in &r.neurons {
            assert!((n.var / expected - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn plan_pools_then_attaches_pooled_ghost() {
        let base = fan(10, 0.1);
        let plan = MitigationPlan::combined(PoolConfig::new(3), GhostConfig::new(GhostMode::Adaptive));
        let net = apply_plan(&base, &plan).unwrap();
        assert_eq!(net.layers[1].width, 33);
        assert_eq!(net.layers[1].ghosts, 3);
        assert_eq!(net.layers[2].width, 6);
        assert_eq!(net.layers[2].ghosts, 3);
        assert_eq!(apply_plan(&base, &MitigationPlan::none()).unwrap(), base);
        assert_eq!(apply_plan(&base, &plan).unwrap(), net);

        let mut single = plan.clone();
        single.ghost.as_mut().unwrap().pooled = false;
        assert_eq!(apply_plan(&base, &single).unwrap().layers[1].ghosts, 1);
    }

    #[test]
    fn plan_rejects_bad_layers() {
        let base = fan(4, 0.25);
        let plan = MitigationPlan::ghost(GhostConfig::new(GhostMode::Direct).on_layers([7]));
        assert!(matches!(apply_plan(&base, &plan), Err(Error::InvalidPlan(_))));
        let plan = MitigationPlan::pool(PoolConfig::new(2).on_layers([0]));
        assert!(apply_plan(&base, &plan).is_err());
    }

    #[test]
    fn plan_config_parses() {
        let plan: MitigationPlan = serde_json::from_str(
            r#"{"ghost":{"mode":"weighted","wg":-0.5,"layers":[1]},"pool":{"m":4,"layers":[1,2]}}"#,
        )
        .unwrap();
        assert_eq!(plan.ghost.as_ref().unwrap().mode, GhostMode::Weighted { wg: -0.5 });
        assert!(plan.ghost.as_ref().unwrap().pooled);
        assert_eq!(plan.pool.unwrap().m, 4);
    }

    fn arbitrary_plan(rng: &mut ChaCha8Rng, depth: usize) -> MitigationPlan {
        let mode = match rng.random_range(0..3) {
            0 => GhostMode::Direct,
            1 => GhostMode::Adaptive,
            _ => GhostMode::Weighted {
                wg: rng.random_range(-2.0..1.0),
            },
        };
        let layers: Vec<usize> = (0..depth).filter(|_| rng.random_bool(0.6)).collect();
        let pooled: Vec<usize> = (1..depth).filter(|_| rng.random_bool(0.6)).collect();
        MitigationPlan {
            ghost: rng.random_bool(0.8).then(|| GhostConfig::new(mode).on_layers(layers)),
            pool: rng
                .random_bool(0.8)
                .then(|| PoolConfig::new(rng.random_range(1..5)).on_layers(pooled)),
        }
    }

    proptest! {
        #[test]
        fn transforms_preserve_noise_free_output(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_net(&mut rng);
            let plan = arbitrary_plan(&mut rng, net.depth());
            let mitigated = apply_plan(&net, &plan).unwrap();
            let u = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let a = forward_noiseless(&net, &u).unwrap().output;
            let b = forward_noiseless(&mitigated, &u).unwrap().output;
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }
}
