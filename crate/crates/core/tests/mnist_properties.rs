//! Properties of the trained MNIST classifier under noise. Each test is
//! skipped (with a note on stderr) when the IDX files are absent.

mod common;

use noisyfnn::mitigation::{GhostConfig, GhostMode, MitigationPlan, PoolConfig};
use noisyfnn::mnist::{
    combined_fixed_plan, combined_plan, evaluate_accuracy, network_accuracy, output_snr_over_digits, DigitSnrTable,
    NOISY_LAYERS,
};
use noisyfnn::noise::NoiseSpec;

use common::{default_model, mnist, Mnist};

fn data() -> Option<&'static Mnist> {
    let d = mnist();
    if d.is_none() {
        eprintln!(
            "MNIST files not found under {}; skipping",
            common::mnist_dir().display()
        );
    }
    d
}

fn noise() -> NoiseSpec {
    NoiseSpec::additive(1e-4, 1e-3).unwrap().on_layers(NOISY_LAYERS)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn median_snr(t: &DigitSnrTable) -> f64 {
    median(t.rows.iter().map(|r| r.snr).collect())
}

#[test]
fn files_load_with_standard_counts() {
    let Some(d) = data() else { return };
    assert_eq!((d.train.len(), d.test.len()), (60_000, 10_000));
    assert_eq!(d.train.width(), 784);
    for set in [&d.train, &d.test] {
        assert!(set.images.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(set.labels.iter().all(|&l| l < 10));
    }
}

#[test]
fn training_loss_falls_over_first_epochs() {
    let Some(d) = data() else { return };
    let losses = &default_model(d).metadata.epoch_losses;
    let steps: Vec<f64> = losses[..5].windows(2).map(|w| w[1] - w[0]).collect();
    let mean = steps.iter().sum::<f64>() / steps.len() as f64;
    assert!(mean <= 0.0, "{losses:?}");
}

#[test]
fn clean_accuracy_is_invariant_under_plans() {
    let Some(d) = data() else { return };
    let model = default_model(d);
    let clean = model.metadata.test_accuracy;
    assert_eq!(network_accuracy(&model.network, &d.test).unwrap(), clean);
    let quiet = NoiseSpec::noiseless();
    for plan in [
        None,
        Some(combined_plan()),
        Some(combined_fixed_plan()),
        Some(MitigationPlan::pool(PoolConfig::new(3))),
        Some(MitigationPlan::ghost(GhostConfig::new(GhostMode::Direct))),
    ] {
        let acc = evaluate_accuracy(model, &d.test, &quiet, plan.as_ref(), 1, 5).unwrap();
        assert_eq!(acc, clean, "{plan:?}");
    }
}

#[test]
fn accuracy_ordering_under_noise() {
    let Some(d) = data() else { return };
    let model = default_model(d);
    let spec = noise();
    let clean = model.metadata.test_accuracy;
    let mean = |name: &str, plan: Option<&MitigationPlan>| {
        let accs: Vec<f64> = (1..=3)
            .map(|seed| evaluate_accuracy(model, &d.test, &spec, plan, 1, seed).unwrap())
            .collect();
        eprintln!("{name}: {accs:?}");
        accs.iter().sum::<f64>() / 3.0
    };
    let adaptive = mean("adaptive", Some(&combined_plan()));
    let fixed = mean("fixed", Some(&combined_fixed_plan()));
    let none = mean("none", None);
    assert!(clean >= adaptive && adaptive >= fixed && fixed >= none);
}

#[test]
fn final_layer_ghost_carries_most_of_the_gain() {
    let Some(d) = data() else { return };
    let model = default_model(d);
    let spec = noise();
    let snr = |plan: Option<&MitigationPlan>| {
        median_snr(&output_snr_over_digits(model, &d.test, &spec, plan, 200, 300, 11).unwrap())
    };
    let none = snr(None);
    let all = snr(Some(&MitigationPlan::ghost(
        GhostConfig::new(GhostMode::Adaptive).on_layers(NOISY_LAYERS),
    )));
    let last = snr(Some(&MitigationPlan::ghost(
        GhostConfig::new(GhostMode::Adaptive).on_layers([2]),
    )));
    eprintln!("median SNR: none {none} all {all} final {last}");
    assert!(all > none);
    assert!(last - none >= 0.6 * (all - none));
}

#[test]
fn pooling_scales_snr_by_root_m_under_uncorrelated_noise() {
    let Some(d) = data() else { return };
    let model = default_model(d);
    let spec = NoiseSpec::additive(1e-4, 0.0).unwrap().on_layers(NOISY_LAYERS);
    let base = output_snr_over_digits(model, &d.test, &spec, None, 200, 2000, 3).unwrap();
    for m in [2usize, 4] {
        let plan = MitigationPlan::pool(PoolConfig::new(m).on_layers(NOISY_LAYERS));
        let pooled = output_snr_over_digits(model, &d.test, &spec, Some(&plan), 200, 2000, 3).unwrap();
        let ratios: Vec<f64> = pooled.rows.iter().zip(&base.rows).map(|(p, b)| p.snr / b.snr).collect();
        let r = median(ratios);
        eprintln!("m = {m}: median SNR ratio {r}");
        assert!((r / (m as f64).sqrt() - 1.0).abs() < 0.1, "m = {m}: ratio {r}");
    }
}
