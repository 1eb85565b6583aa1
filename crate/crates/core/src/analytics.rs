//! Closed-form statistics of connection matrices and variance propagation.
//!
//! The pre-activation of neuron `i` in layer `n + 1` is `a_i = Σ_j W_ij y_j`.
//! With the four-source noise model on `y`, its variance is
//!
//! ```text
//! Var[a_i] = 2D_A^C (Σ_j W_ij)²            + 2D_A^U Σ_j W_ij²
//!          + 2D_M^C (Σ_j W_ij E[x_j])²     + 2D_M^U (1 + 2D_M^C) Σ_j W_ij² E²[x_j]
//!          + (1 + 2D_M^C)(1 + 2D_M^U) Σ_j W_ij² Var[x_j]
//! ```
//!
//! [`propagate_variance_exact`] evaluates this row by row. Replacing the row
//! sums by matrix-wide statistics, `Σ_j W_ij² ≈ I η(W)` and
//! `(Σ_j W_ij)² ≈ I² μ²(W)`, gives [`propagate_variance_approx`], which splits
//! the result into the part driven by correlated noise (scaling with `I²μ²`)
//! and the part driven by uncorrelated noise (scaling with `Iη`).

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_len, Error, Result};
use crate::network::{NetworkTopology, WeightMatrix};
use crate::noise::NoiseSpec;

/// Value returned for the SNR of a signal with zero variance.
pub const UNBOUNDED_SNR: f64 = f64::INFINITY;

fn non_empty(w: &WeightMatrix) -> Result<()> {
    if w.is_empty() {
        Err(Error::InvalidArgument(
            "statistics of an empty matrix are undefined".into(),
        ))
    } else {
        Ok(())
    }
}

/// Square of the mean entry, `μ²(W)`.
pub fn squared_mean(w: &WeightMatrix) -> Result<f64> {
    non_empty(w)?;
    let mean = w.as_array().sum() / w.as_array().len() as f64;
    Ok(mean * mean)
}

/// Mean of the squared entries, `η(W)`.
pub fn mean_of_square(w: &WeightMatrix) -> Result<f64> {
    non_empty(w)?;
    Ok(w.as_array().iter().map(|v| v * v).sum::<f64>() / w.as_array().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixStats {
    pub mu2: f64,
    pub eta: f64,
    /// `I_n² μ²`, the gain applied to correlated noise.
    pub corr_gain: f64,
    /// `I_n η`, the gain applied to uncorrelated and inherited noise.
    pub uncorr_gain: f64,
    pub sources: usize,
    pub targets: usize,
}

impl MatrixStats {
    pub fn of(w: &WeightMatrix) -> Result<Self> {
        let mu2 = squared_mean(w)?;
        let eta = mean_of_square(w)?;
        let i = w.cols() as f64;
        Ok(MatrixStats {
            mu2,
            eta,
            corr_gain: i * i * mu2,
            uncorr_gain: i * eta,
            sources: w.cols(),
            targets: w.rows(),
        })
    }

    /// `I μ² > η`: uncorrelated noise is averaged away more strongly than
    /// correlated noise is, so at equal intensities the correlated
    /// contribution dominates.
    pub fn suppresses_uncorrelated(&self) -> bool {
        self.sources as f64 * self.mu2 > self.eta
    }
}

/// A random `rows x cols` matrix whose entries have squared mean `mu2` and
/// mean square `eta` exactly (up to rounding). The mean is positive.
///
/// Uniform draws are shifted and scaled so that their mean is `sqrt(mu2)`
/// and their population variance is `eta - mu2`.
pub fn matrix_with_stats(rows: usize, cols: usize, mu2: f64, eta: f64, seed: u64) -> Result<WeightMatrix> {
    let n = rows * cols;
    if n == 0 {
        return Err(Error::InvalidArgument("matrix must be non-empty".into()));
    }
    if !(mu2 >= 0.0 && eta.is_finite() && eta >= mu2) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= mu2 <= eta, got mu2 = {mu2}, eta = {eta}"
        )));
    }
    let spread = (eta - mu2).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if sd == 0.0 && spread > 0.0 {
        return Err(Error::InvalidArgument("a single entry cannot have eta > mu2".into()));
    }
    let scale = if spread > 0.0 { spread / sd } else { 0.0 };
    let data = z.iter().map(|v| mu2.sqrt() + scale * (v - mean)).collect();
    WeightMatrix::from_row_major(rows, cols, data)
}

/// Elementwise mean and variance of a layer's signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl MomentState {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        ensure_len("moment state", mean.len(), var.len())?;
        if var.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "variances must be finite and non-negative".into(),
            ));
        }
        Ok(MomentState { mean, var })
    }

    pub fn deterministic(mean: Vec<f64>) -> Self {
        let var = vec![0.0; mean.len()];
        MomentState { mean, var }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Mean and variance of `a = W · y` where `y` is `state` after one pass
/// through the noise model. Intensities are used as given (the layer mask is
/// not consulted). Entries of `state` are taken as mutually independent.
pub fn propagate_variance_exact(w: &WeightMatrix, state: &MomentState, spec: &NoiseSpec) -> Result<MomentState> {
    spec.validate()?;
    ensure_len("source layer moments", w.cols(), state.len())?;
    let (dac, dau) = (spec.additive_correlated, spec.additive_uncorrelated);
    let (dmc, dmu) = (spec.multiplicative_correlated, spec.multiplicative_uncorrelated);
    let pass = (1.0 + 2.0 * dmc) * (1.0 + 2.0 * dmu);

    let mut mean = Vec::with_capacity(w.rows());
    let mut var = Vec::with_capacity(w.rows());
    for i in 0..w.rows() {
        let row = w.row(i);
        let (mut s, mut s2, mut sm, mut s2m2, mut s2v) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((&wij, &m), &v) in row.iter().zip(&state.mean).zip(&state.var) {
            s += wij;
            s2 += wij * wij;
            sm += wij * m;
            s2m2 += wij * wij * m * m;
            s2v += wij * wij * v;
        }
        mean.push(sm);
        var.push(
            2.0 * dac * s * s
                + 2.0 * dau * s2
                + 2.0 * dmc * sm * sm
                + 2.0 * dmu * (1.0 + 2.0 * dmc) * s2m2
                + pass * s2v,
        );
    }
    Ok(MomentState { mean, var })
}

/// Variance of a target pre-activation estimated from matrix statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxVariance {
    /// `I²μ²(W) (2D_A^C + 2D_M^C μ²(E[x]))`
    pub correlated: f64,
    /// `Iη(W) (2D_A^U + 2D_M^U (1 + 2D_M^C) η(E[x]))`
    pub uncorrelated: f64,
    /// Inherited variance, `(1 + 2D_M^C)(1 + 2D_M^U) Iη(W) mean(Var[x])`.
    pub inherited: f64,
    pub total: f64,
}

/// Statistics-based estimate of `Var[a_i]`, identical for every target.
///
/// `μ²(·)` and `η(·)` of the mean vector `E[x]` are its squared mean and mean
/// of squares. The inherited term carries the factor `I` from the row sum
/// `Σ_j W_ij² Var[x_j] ≈ I η(W) mean(Var[x])`.
pub fn propagate_variance_approx(stats: &MatrixStats, state: &MomentState, spec: &NoiseSpec) -> Result<ApproxVariance> {
    spec.validate()?;
    ensure_len("source layer moments", stats.sources, state.len())?;
    if state.is_empty() {
        return Err(Error::InvalidArgument("empty moment state".into()));
    }
    let n = state.len() as f64;
    let mean_mu2 = (state.mean.iter().sum::<f64>() / n).powi(2);
    let mean_eta = state.mean.iter().map(|m| m * m).sum::<f64>() / n;
    let mean_var = state.var.iter().sum::<f64>() / n;
    let (dac, dau) = (spec.additive_correlated, spec.additive_uncorrelated);
    let (dmc, dmu) = (spec.multiplicative_correlated, spec.multiplicative_uncorrelated);

    let correlated = stats.corr_gain * (2.0 * dac + 2.0 * dmc * mean_mu2);
    let uncorrelated = stats.uncorr_gain * (2.0 * dau + 2.0 * dmu * (1.0 + 2.0 * dmc) * mean_eta);
    let inherited = (1.0 + 2.0 * dmc) * (1.0 + 2.0 * dmu) * stats.uncorr_gain * mean_var;
    Ok(ApproxVariance {
        correlated,
        uncorrelated,
        inherited,
        total: correlated + uncorrelated + inherited,
    })
}

/// `mean / sqrt(var)`, or [`UNBOUNDED_SNR`] when the variance is zero.
pub fn predict_snr(mean: f64, var: f64) -> Result<f64> {
    if var < 0.0 || var.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "variance must be non-negative, got {var}"
        )));
    }
    Ok(if var == 0.0 { UNBOUNDED_SNR } else { mean / var.sqrt() })
}

/// Moments of one layer, with full covariance so that correlated noise
/// shared across a layer is carried into later layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMoments {
    /// Mean of the noise-free activation `x` (equal to the mean of `y`).
    pub mean: Array1<f64>,
    /// Covariance of `x` before this layer's noise is added.
    pub cov_x: Array2<f64>,
    /// Covariance of the noisy output `y`.
    pub cov_y: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMoments {
    pub layers: Vec<LayerMoments>,
    pub output_mean: Vec<f64>,
    pub output_cov: Array2<f64>,
}

impl NetworkMoments {
    pub fn output_var(&self) -> Vec<f64> {
        self.output_cov.diag().to_vec()
    }

    pub fn output_snr(&self) -> Vec<f64> {
        self.output_mean
            .iter()
            .zip(self.output_cov.diag())
            .map(|(&m, &v)| predict_snr(m, v.max(0.0)).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Covariance of a layer's noisy output given the covariance of its
/// noise-free input (`cov_x`) and its mean.
pub fn noisy_covariance(mean: &Array1<f64>, cov_x: &Array2<f64>, spec: &NoiseSpec, layer: usize) -> Array2<f64> {
    let n = mean.len();
    if !spec.layers.is_enabled(layer) {
        return cov_x.clone();
    }
    let (dac, dau) = (spec.additive_correlated, spec.additive_uncorrelated);
    let (dmc, dmu) = (spec.multiplicative_correlated, spec.multiplicative_uncorrelated);
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            let c = cov_x[(j, k)];
            let (mj, mk) = (mean[j], mean[k]);
            out[(j, k)] = if j == k {
                2.0 * (dac + dau) + (1.0 + 2.0 * dmc) * (1.0 + 2.0 * dmu) * (c + mj * mj) - mj * mj
            } else {
                2.0 * dac + (1.0 + 2.0 * dmc) * c + 2.0 * dmc * mj * mk
            };
        }
    }
    out
}

/// First-order (delta-method) moment propagation through the whole network.
///
/// Linear maps are propagated exactly with full covariance. Each activation
/// is linearised at the mean pre-activation: `E[f(a)] ≈ f(E[a])` and
/// `Cov[f(a)] ≈ D Cov[a] D` with `D = diag f'(E[a])`. Ghost neurons have
/// mean and derivative zero.
pub fn propagate_moments(net: &NetworkTopology, input: &[f64], spec: &NoiseSpec) -> Result<NetworkMoments> {
    net.validate()?;
    spec.validate()?;
    ensure_len("network input", net.input_width(), input.len())?;

    let first = &net.layers[0];
    let mut a = Array1::from(input.to_vec());
    a.append(ndarray::Axis(0), Array1::zeros(first.ghosts).view())
        .expect("1-d append");
    if let Some(b) = &first.bias {
        a += &Array1::from(b.clone());
    }
    let (mean, cov_x) = linearise(first, &a, &Array2::zeros((first.width, first.width)));
    let cov_y = noisy_covariance(&mean, &cov_x, spec, 0);
    let mut layers = vec![LayerMoments { mean, cov_x, cov_y }];

    for (n, w) in net.weights.iter().enumerate() {
        let layer = &net.layers[n + 1];
        let prev = layers.last().expect("non-empty");
        let w = w.as_array();
        let mut a = w.dot(&prev.mean);
        if let Some(b) = &layer.bias {
            a += &Array1::from(b.clone());
        }
        let cov_a = w.dot(&prev.cov_y).dot(&w.t());
        let (mean, cov_x) = linearise(layer, &a, &cov_a);
        let cov_y = noisy_covariance(&mean, &cov_x, spec, n + 1);
        layers.push(LayerMoments { mean, cov_x, cov_y });
    }

    let last = layers.last().expect("non-empty");
    let (output_mean, output_cov) = match &net.readout {
        Some(r) => {
            let r = r.as_array();
            (r.dot(&last.mean).to_vec(), r.dot(&last.cov_y).dot(&r.t()))
        }
        None => (last.mean.to_vec(), last.cov_y.clone()),
    };
    Ok(NetworkMoments {
        layers,
        output_mean,
        output_cov,
    })
}

fn linearise(layer: &crate::network::Layer, a: &Array1<f64>, cov_a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let signal = layer.signal_width();
    let f = layer.activation;
    let mean = Array1::from_shape_fn(a.len(), |i| if i < signal { f.apply(a[i]) } else { 0.0 });
    let d = Array1::from_shape_fn(a.len(), |i| if i < signal { f.derivative(a[i]) } else { 0.0 });
    let cov = Array2::from_shape_fn(cov_a.dim(), |(j, k)| d[j] * cov_a[(j, k)] * d[k]);
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, Layer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn generated_matrix_hits_targets() {
        let w = matrix_with_stats(1, 100, 1.03e-4, 1.44e-3, 3).unwrap();
        assert!(close(squared_mean(&w).unwrap(), 1.03e-4, 1e-10));
        assert!(close(mean_of_square(&w).unwrap(), 1.44e-3, 1e-10));
        let flat = matrix_with_stats(2, 3, 0.25, 0.25, 3).unwrap();
        assert!(flat.as_array().iter().all(|&v| close(v, 0.5, 1e-12)));
        assert!(matrix_with_stats(1, 1, 0.1, 0.2, 0).is_err());
        assert!(matrix_with_stats(1, 4, 0.3, 0.2, 0).is_err());
        assert!(matrix_with_stats(0, 4, 0.1, 0.2, 0).is_err());
    }

    #[test]
    fn statistics_of_small_matrices() {
        let uniform = WeightMatrix::filled(1, 100, 0.01);
        assert!(close(squared_mean(&uniform).unwrap(), 1e-4, 1e-12));
        assert!(close(mean_of_square(&uniform).unwrap(), 1e-4, 1e-12));

        let w = WeightMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(squared_mean(&w).unwrap(), 6.25);
        assert_eq!(mean_of_square(&w).unwrap(), 7.5);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let w = WeightMatrix::from_row_major(0, 3, vec![]).unwrap();
        assert!(squared_mean(&w).is_err());
        assert!(mean_of_square(&w).is_err());
    }

    #[test]
    fn constant_matrix_has_equal_statistics() {
        let w = WeightMatrix::filled(7, 3, -0.4);
        let s = MatrixStats::of(&w).unwrap();
        assert!(close(s.mu2, s.eta, 1e-14));
        assert!(close(s.corr_gain, 9.0 * 0.16, 1e-12));
        assert!(close(s.uncorr_gain, 3.0 * 0.16, 1e-12));
    }

    #[test]
    fn noise_free_propagation_is_weighted_variance_sum() {
        let w = WeightMatrix::from_rows(&[vec![0.5, -1.0, 2.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let st = MomentState::new(vec![0.2, 0.4, 0.6], vec![1e-3, 2e-3, 3e-3]).unwrap();
        let out = propagate_variance_exact(&w, &st, &NoiseSpec::noiseless()).unwrap();
        assert!(close(out.var[0], 0.25e-3 + 2e-3 + 12e-3, 1e-12));
        assert!(close(out.var[1], 3e-3, 1e-12));
        assert!(close(out.mean[0], 0.1 - 0.4 + 1.2, 1e-12));
    }

    #[test]
    fn uniform_row_additive_terms() {
        let w = WeightMatrix::filled(1, 100, 0.01);
        let st = MomentState::deterministic(vec![0.5; 100]);
        let corr = propagate_variance_exact(&w, &st, &NoiseSpec::additive(0.0, 1e-3).unwrap()).unwrap();
        assert!(close(corr.var[0], 2e-3, 1e-12));
        let unc = propagate_variance_exact(&w, &st, &NoiseSpec::additive(1e-4, 0.0).unwrap()).unwrap();
        assert!(close(unc.var[0], 2e-6, 1e-12));
    }

    #[test]
    fn approximation_is_exact_for_uniform_matrices() {
        let w = WeightMatrix::filled(4, 50, 0.03);
        let stats = MatrixStats::of(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let st = MomentState::new(
            (0..50).map(|_| rng.random_range(0.0..1.0)).collect(),
            (0..50).map(|_| rng.random_range(0.0..1e-3)).collect(),
        )
        .unwrap();
        let spec = NoiseSpec::new(1e-4, 2e-4, 1e-3, 5e-4).unwrap();
        let exact = propagate_variance_exact(&w, &st, &spec).unwrap();
        let approx = propagate_variance_approx(&stats, &st, &spec).unwrap();
        for v in exact.var {
            assert!(close(approx.total, v, 1e-12));
        }
        assert_eq!(approx.total, approx.correlated + approx.uncorrelated + approx.inherited);
    }

    #[test]
    fn approximation_tracks_random_positive_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let w = WeightMatrix::from_fn(100, 100, |_, _| rng.random_range(0.0..0.02));
        let st = MomentState::new(
            (0..100).map(|_| rng.random_range(0.0..1.0)).collect(),
            (0..100).map(|_| rng.random_range(0.0..1e-3)).collect(),
        )
        .unwrap();
        let spec = NoiseSpec::new(1e-4, 1e-4, 1e-3, 1e-3).unwrap();
        let exact = propagate_variance_exact(&w, &st, &spec).unwrap();
        let mean_exact = exact.var.iter().sum::<f64>() / 100.0;
        let approx = propagate_variance_approx(&MatrixStats::of(&w).unwrap(), &st, &spec).unwrap();
        assert!(
            close(approx.total, mean_exact, 0.15),
            "{} vs {}",
            approx.total,
            mean_exact
        );
    }

    #[test]
    fn approximation_without_noise_keeps_only_inherited_term() {
        let w = WeightMatrix::filled(2, 3, 0.5);
        let st = MomentState::new(vec![1.0; 3], vec![1e-3; 3]).unwrap();
        let a = propagate_variance_approx(&MatrixStats::of(&w).unwrap(), &st, &NoiseSpec::noiseless()).unwrap();
        assert_eq!(a.correlated, 0.0);
        assert_eq!(a.uncorrelated, 0.0);
        assert!(close(a.total, 3.0 * 0.25 * 1e-3, 1e-12));
    }

    #[test]
    fn dominance_predicate_for_equal_additive_intensities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let w = WeightMatrix::from_fn(5, 40, |_, _| rng.random_range(-0.2..1.0));
            let s = MatrixStats::of(&w).unwrap();
            let st = MomentState::deterministic(vec![0.0; 40]);
            let a = propagate_variance_approx(&s, &st, &NoiseSpec::additive(1e-4, 1e-4).unwrap()).unwrap();
            assert_eq!(s.suppresses_uncorrelated(), a.correlated > a.uncorrelated);
        }
    }

    #[test]
    fn snr_arithmetic() {
        assert!(close(predict_snr(1.0, 1e-4).unwrap(), 100.0, 1e-12));
        assert_eq!(predict_snr(0.3, 0.0).unwrap(), UNBOUNDED_SNR);
        assert!(predict_snr(1.0, -1e-9).is_err());
        // Pure multiplicative noise on a linear neuron: input independent.
        for x in [0.1, 0.5, 3.0] {
            let v = crate::noise::layer_noise_variance(&[x], &[0.0], &NoiseSpec::multiplicative(1e-3, 0.0).unwrap())
                .unwrap()[0];
            assert!(close(predict_snr(x, v).unwrap(), 1.0 / (2e-3f64).sqrt(), 1e-12));
        }
    }

    #[test]
    fn network_propagation_matches_single_layer_formula() {
        // With an independent (diagonal) source covariance the diagonal of
        // W Σ_y Wᵀ equals the row-wise formula.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = WeightMatrix::from_fn(3, 6, |_, _| rng.random_range(-1.0..1.0));
        let net = NetworkTopology::new(vec![Layer::linear(6), Layer::linear(3)], vec![w.clone()]).unwrap();
        let u: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        let spec = NoiseSpec::new(1e-4, 3e-4, 1e-3, 2e-4).unwrap().on_layers([0]);
        let moments = propagate_moments(&net, &u, &spec).unwrap();
        let exact = propagate_variance_exact(&w, &MomentState::deterministic(u), &spec).unwrap();
        for (a, b) in moments.output_var().iter().zip(&exact.var) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn delta_method_on_sigmoid_layer() {
        let net = NetworkTopology::new(
            vec![Layer::linear(1), Layer::new(1, Activation::sigmoid(2.0, 0.0))],
            vec![WeightMatrix::filled(1, 1, 1.0)],
        )
        .unwrap();
        let spec = NoiseSpec::additive(1e-4, 0.0).unwrap().on_layers([0]);
        let m = propagate_moments(&net, &[0.3], &spec).unwrap();
        let d = Activation::sigmoid(2.0, 0.0).derivative(0.3);
        assert!(close(m.output_var()[0], d * d * 2e-4, 1e-12));
    }
}
