//! Monte Carlo trial engine and empirical SNR estimation.
//!
//! The same input is presented `K` times; each presentation is a full noisy
//! forward pass. Trials are processed in fixed-size chunks that may run on
//! any thread, and partial moments are merged in chunk order with
//! compensated sums, so results are bitwise identical for any thread count.

use std::io::Write;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{predict_snr, propagate_moments, UNBOUNDED_SNR};
use crate::error::{ensure_len, Error, Result};
use crate::mitigation::{apply_plan, MitigationPlan};
use crate::network::{activate_batch, forward_noiseless, NetworkTopology};
use crate::noise::{apply_noise_batch, NoiseSpec};
use crate::rng::RngStream;

/// Trials per work item.
pub const CHUNK: usize = 1024;

pub const DEFAULT_TRIALS: usize = 300;

/// Noisy forward pass for a batch. Row `r` of `inputs` is simulated at
/// `(trial, timestep) = sites[r]`.
pub fn forward_batch(
    net: &NetworkTopology,
    inputs: ArrayView2<'_, f64>,
    spec: &NoiseSpec,
    rng: &RngStream,
    sites: &[(u32, u32)],
) -> Result<Array2<f64>> {
    ensure_len("batch input width", net.input_width(), inputs.ncols())?;
    ensure_len("batch sites", inputs.nrows(), sites.len())?;
    let rows = inputs.nrows();
    let first = &net.layers[0];

    let mut y = Array2::zeros((rows, first.width));
    y.slice_mut(s![.., ..inputs.ncols()]).assign(&inputs);
    if let Some(b) = &first.bias {
        y += &ndarray::ArrayView1::from(b.as_slice());
    }
    activate_batch(first, &mut y);
    apply_noise_batch(&mut y, 0, spec, rng, sites);

    for (n, w) in net.weights.iter().enumerate() {
        let layer = &net.layers[n + 1];
        let mut a = y.dot(&w.as_array().t());
        if let Some(b) = &layer.bias {
            a += &ndarray::ArrayView1::from(b.as_slice());
        }
        activate_batch(layer, &mut a);
        apply_noise_batch(&mut a, n + 1, spec, rng, sites);
        y = a;
    }
    Ok(match &net.readout {
        Some(r) => y.dot(&r.as_array().t()),
        None => y,
    })
}

fn chunk_ranges(k: usize) -> Vec<(usize, usize)> {
    (0..k)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(k)))
        .collect()
}

fn check_trials(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {k}")));
    }
    if k > u32::MAX as usize {
        return Err(Error::InvalidArgument(
            "trial count exceeds the 32-bit trial coordinate".into(),
        ));
    }
    Ok(())
}

fn trial_chunk(
    net: &NetworkTopology,
    input: &[f64],
    spec: &NoiseSpec,
    rng: &RngStream,
    timestep: u32,
    (start, end): (usize, usize),
) -> Result<Array2<f64>> {
    let rows = end - start;
    let inputs = ArrayView2::from_shape((1, input.len()), input)
        .expect("row view")
        .broadcast((rows, input.len()))
        .expect("broadcast input")
        .to_owned();
    let sites: Vec<(u32, u32)> = (start..end).map(|t| (t as u32, timestep)).collect();
    forward_batch(net, inputs.view(), spec, rng, &sites)
}

/// `K` independent noisy outputs for one input (rows are trials).
pub fn run_trials(net: &NetworkTopology, input: &[f64], spec: &NoiseSpec, k: usize, seed: u64) -> Result<Array2<f64>> {
    run_trials_at(net, input, spec, k, &RngStream::new(seed), 0)
}

pub fn run_trials_at(
    net: &NetworkTopology,
    input: &[f64],
    spec: &NoiseSpec,
    k: usize,
    rng: &RngStream,
    timestep: u32,
) -> Result<Array2<f64>> {
    net.validate()?;
    spec.validate()?;
    check_trials(k)?;
    ensure_len("network input", net.input_width(), input.len())?;
    let chunks = chunk_ranges(k)
        .into_par_iter()
        .map(|range| trial_chunk(net, input, spec, rng, timestep, range))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<_> = chunks.iter().map(|c| c.view()).collect();
    Ok(ndarray::concatenate(Axis(0), &views).expect("chunks share a width"))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Streaming per-column mean and variance. Values are accumulated as
/// deviations from a fixed shift to avoid cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    shift: Vec<f64>,
    sum: Vec<CompensatedSum>,
    sum_sq: Vec<CompensatedSum>,
    count: usize,
}

impl MomentAccumulator {
    pub fn new(shift: Vec<f64>) -> Self {
        let n = shift.len();
        MomentAccumulator {
            shift,
            sum: vec![CompensatedSum::default(); n],
            sum_sq: vec![CompensatedSum::default(); n],
            count: 0,
        }
    }

    pub fn add_rows(&mut self, rows: ArrayView2<'_, f64>) {
        for row in rows.rows() {
            for (j, &v) in row.iter().enumerate() {
                let d = v - self.shift[j];
                self.sum[j].add(d);
                self.sum_sq[j].add(d * d);
            }
        }
        self.count += rows.nrows();
    }

    /// Appends `other`, which must share the shift.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        debug_assert_eq!(self.shift, other.shift);
        for j in 0..self.shift.len() {
            self.sum[j].merge(&other.sum[j]);
            self.sum_sq[j].merge(&other.sum_sq[j]);
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Per-column (mean, unbiased variance).
    pub fn finish(&self) -> Vec<(f64, f64)> {
        let n = self.count as f64;
        self.shift
            .iter()
            .zip(self.sum.iter().zip(&self.sum_sq))
            .map(|(&shift, (s, s2))| {
                let (s, s2) = (s.value(), s2.value());
                let var = ((s2 - s * s / n) / (n - 1.0)).max(0.0);
                (shift + s / n, var)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronSnr {
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// `mean / sqrt(var)`, or [`UNBOUNDED_SNR`] for zero variance.
    pub snr: f64,
}

impl NeuronSnr {
    fn from_moments(mean: f64, var: f64) -> Self {
        NeuronSnr {
            mean,
            var,
            snr: if var > 0.0 { mean / var.sqrt() } else { UNBOUNDED_SNR },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub trials: usize,
    pub neurons: Vec<NeuronSnr>,
}

/// Empirical mean, unbiased variance and SNR per column of `samples`.
pub fn estimate_snr(samples: ArrayView2<'_, f64>) -> Result<SnrReport> {
    if samples.nrows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "SNR needs at least 2 samples, got {}",
            samples.nrows()
        )));
    }
    let mut acc = MomentAccumulator::new(samples.row(0).to_vec());
    acc.add_rows(samples);
    Ok(report(&acc))
}

fn report(acc: &MomentAccumulator) -> SnrReport {
    SnrReport {
        trials: acc.count(),
        neurons: acc
            .finish()
            .into_iter()
            .map(|(m, v)| NeuronSnr::from_moments(m, v))
            .collect(),
    }
}

/// Streams `K` trials into per-output moments without storing samples.
pub fn trial_moments(
    net: &NetworkTopology,
    input: &[f64],
    spec: &NoiseSpec,
    k: usize,
    rng: &RngStream,
    timestep: u32,
) -> Result<SnrReport> {
    net.validate()?;
    spec.validate()?;
    check_trials(k)?;
    let clean = forward_noiseless(net, input)?.output;
    let partials = chunk_ranges(k)
        .into_par_iter()
        .map(|range| {
            let out = trial_chunk(net, input, spec, rng, timestep, range)?;
            let mut acc = MomentAccumulator::new(clean.clone());
            acc.add_rows(out.view());
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = MomentAccumulator::new(clean);
    for p in &partials {
        total.merge(p);
    }
    Ok(report(&total))
}

/// Where sweep inputs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputSet {
    Explicit(Vec<Vec<f64>>),
    /// `count` vectors drawn uniformly from `[0, 1]`.
    Uniform {
        count: usize,
    },
}

impl InputSet {
    pub fn resolve(&self, width: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        match self {
            InputSet::Explicit(v) => {
                for u in v {
                    ensure_len("sweep input", width, u.len())?;
                }
                Ok(v.clone())
            }
            InputSet::Uniform { count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..*count)
                    .map(|_| (0..width).map(|_| rng.random_range(0.0..=1.0)).collect())
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Presentations per input, `K`.
    pub trials: usize,
    pub seed: u64,
    pub inputs: InputSet,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trials: DEFAULT_TRIALS,
            seed: 0,
            inputs: InputSet::Uniform { count: 1000 },
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_trials(self.trials)
    }
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub input_id: usize,
    pub output_neuron: usize,
    pub noise_free_value: f64,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub snr: f64,
    pub analytic_var: f64,
    pub analytic_snr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Rows of one output neuron, in sweep order.
    pub fn neuron(&self, output_neuron: usize) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.output_neuron == output_neuron)
    }
}

/// Runs `K` trials per input and tabulates empirical and analytic moments.
///
/// Input `s` is simulated at timestep `s`. Rows are grouped by output neuron
/// and sorted by noise-free output value. The analytic columns come from
/// [`propagate_moments`] on the (mitigated) network.
pub fn snr_sweep(
    net: &NetworkTopology,
    inputs: &[Vec<f64>],
    spec: &NoiseSpec,
    plan: Option<&MitigationPlan>,
    k: usize,
    seed: u64,
) -> Result<SweepTable> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one input".into()));
    }
    if inputs.len() > u32::MAX as usize {
        return Err(Error::InvalidArgument("too many sweep inputs".into()));
    }
    check_trials(k)?;
    let net = match plan {
        Some(p) => apply_plan(net, p)?,
        None => net.clone(),
    };
    let rng = RngStream::new(seed);
    let per_input = inputs
        .par_iter()
        .enumerate()
        .map(|(s, u)| {
            let clean = forward_noiseless(&net, u)?.output;
            let emp = trial_moments(&net, u, spec, k, &rng, s as u32)?;
            let analytic = propagate_moments(&net, u, spec)?;
            let var = analytic.output_var();
            Ok(clean
                .iter()
                .enumerate()
                .map(|(o, &v)| {
                    let e = emp.neurons[o];
                    let avar = var[o].max(0.0);
                    SweepRow {
                        input_id: s,
                        output_neuron: o,
                        noise_free_value: v,
                        emp_mean: e.mean,
                        emp_var: e.var,
                        snr: e.snr,
                        analytic_var: avar,
                        analytic_snr: predict_snr(analytic.output_mean[o], avar).expect("non-negative"),
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = per_input.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        a.output_neuron
            .cmp(&b.output_neuron)
            .then(a.noise_free_value.total_cmp(&b.noise_free_value))
            .then(a.input_id.cmp(&b.input_id))
    });
    Ok(SweepTable { rows })
}
