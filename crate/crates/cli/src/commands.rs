use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use noisyfnn::analytics::MatrixStats;
use noisyfnn::mitigation::apply_plan;
use noisyfnn::mnist::{self, Dataset, Split, TrainedModel, NOISY_LAYERS};
use noisyfnn::sim;

use crate::config::{mnist_plan, ExperimentConfig};
use crate::ConfigError;

/// Creates the output directory and echoes the effective config into it.
fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let out = cfg.out_dir();
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let echo = toml::to_string(cfg).context("cannot serialise the effective config")?;
    fs::write(out.join("config.toml"), echo).context("cannot write config.toml")?;
    Ok(out)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StatsRow {
    layer: usize,
    sources: usize,
    targets: usize,
    mu2: f64,
    eta: f64,
    i_mu2: f64,
    i_eta: f64,
    i_mu2_gt_eta: bool,
}

pub fn stats(cfg: &ExperimentConfig) -> Result<()> {
    let net = cfg.network()?;
    let rows = net
        .weights
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let s = MatrixStats::of(w)?;
            Ok(StatsRow {
                layer: n,
                sources: s.sources,
                targets: s.targets,
                mu2: s.mu2,
                eta: s.eta,
                i_mu2: s.sources as f64 * s.mu2,
                i_eta: s.uncorr_gain,
                i_mu2_gt_eta: s.suppresses_uncorrelated(),
            })
        })
        .collect::<noisyfnn::Result<Vec<_>>>()?;
    let out = prepare_out(cfg)?;
    write_rows(&out.join("stats.csv"), &rows)?;

    println!(
        "{:>5} {:>7} {:>7} {:>12} {:>12} {:>12} {:>12}  I*mu2 > eta",
        "layer", "sources", "targets", "mu2", "eta", "I*mu2", "I*eta"
    );
    for r in &rows {
        println!(
            "{:>5} {:>7} {:>7} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}  {}",
            r.layer,
            r.sources,
            r.targets,
            r.mu2,
            r.eta,
            r.i_mu2,
            r.i_eta,
            if r.i_mu2_gt_eta { "yes" } else { "no" }
        );
    }
    Ok(())
}

pub fn snr_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let net = cfg.network()?;
    let spec = cfg.noise_spec(None)?;
    let plan = cfg.mitigation(net.depth());
    if let Some(p) = &plan {
        apply_plan(&net, p).map_err(ConfigError::from_lib)?;
    }
    let inputs = cfg
        .sim
        .inputs
        .resolve(net.input_width(), cfg.sim.seed)
        .map_err(ConfigError::from_lib)?;
    let out = prepare_out(cfg)?;
    let table = sim::snr_sweep(&net, &inputs, &spec, plan.as_ref(), cfg.sim.trials, cfg.sim.seed)?;
    let path = out.join("snr_sweep.csv");
    table.write_csv(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?)?;
    println!(
        "{} inputs x {} trials, {} rows written to {}",
        inputs.len(),
        cfg.sim.trials,
        table.rows.len(),
        path.display()
    );
    Ok(())
}

fn mnist_file(cfg: &ExperimentConfig, name: &str) -> Result<PathBuf, ConfigError> {
    let p = cfg.mnist.dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(ConfigError::new(format!(
            "missing MNIST file {} (run scripts/fetch_mnist.sh or pass --data)",
            p.display()
        )))
    }
}

fn load_split(cfg: &ExperimentConfig, split: Split) -> Result<Dataset> {
    let (images, labels) = match split {
        Split::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        Split::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    };
    let (i, l) = (mnist_file(cfg, images)?, mnist_file(cfg, labels)?);
    Ok(mnist::load_idx(i, l, split).map_err(ConfigError::from_lib)?)
}

fn model_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.mnist
        .model
        .clone()
        .unwrap_or_else(|| cfg.out_dir().join("model.json"))
}

fn load_model(cfg: &ExperimentConfig) -> Result<TrainedModel> {
    let path = model_path(cfg);
    if !path.is_file() {
        return Err(ConfigError::new(format!(
            "missing model {} (run mnist-train first or pass --model)",
            path.display()
        ))
        .into());
    }
    TrainedModel::load(&path).map_err(|e| ConfigError::new(format!("cannot load model {}: {e}", path.display())).into())
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    loss: f64,
}

pub fn mnist_train(cfg: &ExperimentConfig) -> Result<()> {
    cfg.mnist.train.validate().map_err(ConfigError::from_lib)?;
    let train = load_split(cfg, Split::Train)?;
    let test = load_split(cfg, Split::Test)?;
    let out = prepare_out(cfg)?;
    let model = mnist::train(&train, &test, &cfg.mnist.train)?;
    let path = model_path(cfg);
    model
        .save(&path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let rows: Vec<EpochRow> = model
        .metadata
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(i, &loss)| EpochRow { epoch: i + 1, loss })
        .collect();
    write_rows(&out.join("training.csv"), &rows)?;
    println!("test accuracy: {}", model.metadata.test_accuracy);
    println!("model written to {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct AccuracyRow {
    plan: String,
    presentations: usize,
    seed: u64,
    accuracy: f64,
}

fn plan_label(cfg: &ExperimentConfig) -> String {
    match (&cfg.plan.preset, &cfg.plan.ghost, &cfg.plan.pool) {
        (None, None, None) => "none".into(),
        (Some(p), None, None) => format!("{p:?}").to_lowercase(),
        _ => "custom".into(),
    }
}

pub fn mnist_eval(cfg: &ExperimentConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let test = load_split(cfg, Split::Test)?;
    let spec = cfg.noise_spec(Some(&NOISY_LAYERS))?;
    let plan = mnist_plan(cfg);
    if let Some(p) = &plan {
        apply_plan(&model.network, p).map_err(ConfigError::from_lib)?;
    }
    let out = prepare_out(cfg)?;
    let accuracy = mnist::evaluate_accuracy(
        &model,
        &test,
        &spec,
        plan.as_ref(),
        cfg.mnist.presentations,
        cfg.sim.seed,
    )?;
    write_rows(
        &out.join("accuracy.csv"),
        &[AccuracyRow {
            plan: plan_label(cfg),
            presentations: cfg.mnist.presentations,
            seed: cfg.sim.seed,
            accuracy,
        }],
    )?;
    println!("accuracy: {accuracy}");
    Ok(())
}

pub fn mnist_snr(cfg: &ExperimentConfig) -> Result<()> {
    let model = load_model(cfg)?;
    let test = load_split(cfg, Split::Test)?;
    let spec = cfg.noise_spec(Some(&NOISY_LAYERS))?;
    let plan = mnist_plan(cfg);
    if let Some(p) = &plan {
        apply_plan(&model.network, p).map_err(ConfigError::from_lib)?;
    }
    let out = prepare_out(cfg)?;
    let table = mnist::output_snr_over_digits(
        &model,
        &test,
        &spec,
        plan.as_ref(),
        cfg.mnist.digits,
        cfg.sim.trials,
        cfg.sim.seed,
    )?;
    let path = out.join("mnist_snr.csv");
    table.write_csv(File::create(&path).with_context(|| format!("cannot write {}", path.display()))?)?;
    match table.max_snr() {
        Some(s) => println!("max SNR: {s}"),
        None => println!("max SNR: unbounded (no noise)"),
    }
    Ok(())
}
