use std::io::Write;

use ndarray::{s, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::idx::Dataset;
use super::train::TrainedModel;
use crate::error::{ensure_len, Error, Result};
use crate::mitigation::{apply_plan, GhostConfig, GhostMode, MitigationPlan, PoolConfig};
use crate::network::{forward_noiseless, NetworkTopology};
use crate::noise::NoiseSpec;
use crate::rng::RngStream;
use crate::sim::{forward_batch, trial_moments, CHUNK};

/// Hidden and output layers. The input layer (the pixels) is noise-free.
pub const NOISY_LAYERS: [usize; 2] = [1, 2];

/// Pools of 4 and adaptive ghosts on the hidden and output layers.
pub fn combined_plan() -> MitigationPlan {
    MitigationPlan::combined(
        PoolConfig::new(4).on_layers(NOISY_LAYERS),
        GhostConfig::new(GhostMode::Adaptive).on_layers(NOISY_LAYERS),
    )
}

/// Pools of 4 on the hidden and output layers and one fixed-weight
/// (`W_g = -1`) ghost on the output layer.
pub fn combined_fixed_plan() -> MitigationPlan {
    MitigationPlan::combined(
        PoolConfig::new(4).on_layers(NOISY_LAYERS),
        GhostConfig::new(GhostMode::Weighted { wg: -1.0 }).on_layers([2]),
    )
}

fn argmax(v: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn check_fit(net: &NetworkTopology, data: &Dataset) -> Result<()> {
    ensure_len("image width vs network input", net.input_width(), data.width())?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if data.len() > u32::MAX as usize {
        return Err(Error::InvalidArgument(
            "dataset exceeds the 32-bit timestep coordinate".into(),
        ));
    }
    Ok(())
}

fn count_correct(
    net: &NetworkTopology,
    data: &Dataset,
    spec: &NoiseSpec,
    presentations: usize,
    rng: &RngStream,
) -> Result<usize> {
    let items: Vec<(usize, usize)> = (0..presentations)
        .flat_map(|p| (0..data.len()).step_by(CHUNK).map(move |start| (p, start)))
        .collect();
    let counts = items
        .into_par_iter()
        .map(|(p, start)| {
            let end = (start + CHUNK).min(data.len());
            let sites: Vec<(u32, u32)> = (start..end).map(|i| (p as u32, i as u32)).collect();
            let out = forward_batch(net, data.images.slice(s![start..end, ..]), spec, rng, &sites)?;
            Ok(out
                .rows()
                .into_iter()
                .zip(&data.labels[start..end])
                .filter(|(row, &label)| argmax(*row) == label as usize)
                .count())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.into_iter().sum())
}

/// Noise-free accuracy of a bare network.
pub fn network_accuracy(net: &NetworkTopology, data: &Dataset) -> Result<f64> {
    net.validate()?;
    check_fit(net, data)?;
    let correct = count_correct(net, data, &NoiseSpec::noiseless(), 1, &RngStream::new(0))?;
    Ok(correct as f64 / data.len() as f64)
}

/// Fraction of correct argmax classifications over every image and
/// presentation, each presentation being one noisy forward pass.
pub fn evaluate_accuracy(
    model: &TrainedModel,
    data: &Dataset,
    spec: &NoiseSpec,
    plan: Option<&MitigationPlan>,
    presentations: usize,
    seed: u64,
) -> Result<f64> {
    spec.validate()?;
    if presentations == 0 || presentations > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "invalid presentation count {presentations}"
        )));
    }
    let net = match plan {
        Some(p) => apply_plan(&model.network, p)?,
        None => model.network.clone(),
    };
    check_fit(&net, data)?;
    let correct = count_correct(&net, data, spec, presentations, &RngStream::new(seed))?;
    Ok(correct as f64 / (data.len() * presentations) as f64)
}

/// SNR of the winning output neuron for one digit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigitSnr {
    pub digit_index: usize,
    pub label: u8,
    /// Output neuron with the largest noise-free value.
    pub winner: usize,
    pub noise_free_value: f64,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitSnrTable {
    pub rows: Vec<DigitSnr>,
}

impl DigitSnrTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Largest finite SNR, if any.
    pub fn max_snr(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.snr)
            .filter(|s| s.is_finite())
            .max_by(f64::total_cmp)
    }
}

/// Draws `count` distinct test digits and estimates, over `k` presentations
/// each, the SNR of the output neuron that wins in the noise-free pass.
/// Rows are sorted by that neuron's noise-free value.
pub fn output_snr_over_digits(
    model: &TrainedModel,
    data: &Dataset,
    spec: &NoiseSpec,
    plan: Option<&MitigationPlan>,
    count: usize,
    k: usize,
    seed: u64,
) -> Result<DigitSnrTable> {
    spec.validate()?;
    if count == 0 || count > data.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {count} digits from {} images",
            data.len()
        )));
    }
    let net = match plan {
        Some(p) => apply_plan(&model.network, p)?,
        None => model.network.clone(),
    };
    check_fit(&net, data)?;
    let mut pick = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut pick, data.len(), count).into_vec();
    indices.sort_unstable();

    let rng = RngStream::new(seed);
    let mut rows = indices
        .par_iter()
        .map(|&i| {
            let image = data.image(i).to_vec();
            let clean = forward_noiseless(&net, &image)?.output;
            let winner = argmax(ArrayView1::from(&clean));
            let report = trial_moments(&net, &image, spec, k, &rng, i as u32)?;
            let n = report.neurons[winner];
            Ok(DigitSnr {
                digit_index: i,
                label: data.labels[i],
                winner,
                noise_free_value: clean[winner],
                emp_mean: n.mean,
                emp_var: n.var,
                snr: n.snr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.noise_free_value
            .total_cmp(&b.noise_free_value)
            .then(a.digit_index.cmp(&b.digit_index))
    });
    Ok(DigitSnrTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::UNBOUNDED_SNR;
    use crate::mnist::{train, Split, TrainConfig};
    use ndarray::Array2;
    use rand::Rng;

    fn toy(n: usize, split: Split, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut images = Array2::zeros((n, 784));
        let mut labels = Vec::with_capacity(n);
        for r in 0..n {
            let l = rng.random_range(0..10u8);
            for j in 0..784 {
                images[(r, j)] = if j / 78 == l as usize {
                    rng.random_range(0.5..1.0)
                } else {
                    0.0
                };
            }
            labels.push(l);
        }
        Dataset::new(images, labels, split).unwrap()
    }

    fn model() -> (TrainedModel, Dataset) {
        let te = toy(300, Split::Test, 2);
        let cfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        (train(&toy(400, Split::Train, 1), &te, &cfg).unwrap(), te)
    }

    #[test]
    fn noiseless_accuracy_matches_training_record_under_any_plan() {
        let (m, te) = model();
        let quiet = NoiseSpec::noiseless();
        let clean = evaluate_accuracy(&m, &te, &quiet, None, 1, 5).unwrap();
        assert_eq!(clean, m.metadata.test_accuracy);
        for plan in [combined_plan(), combined_fixed_plan()] {
            assert_eq!(evaluate_accuracy(&m, &te, &quiet, Some(&plan), 2, 5).unwrap(), clean);
        }
    }

    #[test]
    fn evaluation_is_seeded() {
        let (m, te) = model();
        let spec = NoiseSpec::additive(1e-2, 1e-1).unwrap().on_layers(NOISY_LAYERS);
        let a = evaluate_accuracy(&m, &te, &spec, None, 2, 7).unwrap();
        assert_eq!(a, evaluate_accuracy(&m, &te, &spec, None, 2, 7).unwrap());
        assert!((0.0..=1.0).contains(&a));
        assert!(evaluate_accuracy(&m, &te, &spec, None, 0, 7).is_err());
        let narrow = Dataset::new(Array2::zeros((1, 3)), vec![0], Split::Test).unwrap();
        assert!(evaluate_accuracy(&m, &narrow, &spec, None, 1, 7).is_err());
    }

    #[test]
    fn zero_noise_gives_unbounded_snr() {
        let (m, te) = model();
        let t = output_snr_over_digits(&m, &te, &NoiseSpec::noiseless(), None, 20, 10, 3).unwrap();
        assert_eq!(t.rows.len(), 20);
        assert!(t.rows.iter().all(|r| r.snr == UNBOUNDED_SNR));
        assert_eq!(t.max_snr(), None);
        assert!(t
            .rows
            .windows(2)
            .all(|w| w[0].noise_free_value <= w[1].noise_free_value));
        assert!(output_snr_over_digits(&m, &te, &NoiseSpec::noiseless(), None, 301, 10, 3).is_err());
    }

    #[test]
    fn snr_table_csv() {
        let (m, te) = model();
        let spec = NoiseSpec::additive(1e-4, 1e-3).unwrap().on_layers(NOISY_LAYERS);
        let t = output_snr_over_digits(&m, &te, &spec, None, 5, 50, 3).unwrap();
        let csv = t.to_csv_string().unwrap();
        assert!(csv.starts_with("digit_index,label,winner,noise_free_value,emp_mean,emp_var,snr\n"));
        assert_eq!(csv.lines().count(), 6);
        assert!(t.max_snr().unwrap() > 0.0);
    }
}
