#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use noisyfnn::mnist::{load_mnist_dir, train, Dataset, TrainConfig, TrainedModel};

pub fn mnist_dir() -> PathBuf {
    match std::env::var_os("NOISYFNN_MNIST_DIR") {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"),
    }
}

pub struct Mnist {
    pub train: Dataset,
    pub test: Dataset,
}

/// The MNIST splits, or `None` when the files have not been fetched.
pub fn mnist() -> Option<&'static Mnist> {
    static DATA: OnceLock<Option<Mnist>> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = mnist_dir();
        if !dir.join("train-images-idx3-ubyte").exists() {
            return None;
        }
        let (train, test) = load_mnist_dir(&dir).expect("MNIST files are readable");
        Some(Mnist { train, test })
    })
    .as_ref()
}

fn cache_path() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("mnist-default-model.json")
}

/// Trains with the default config, timing it, and caches the model for other
/// test binaries.
pub fn train_default(data: &Mnist) -> (TrainedModel, Duration) {
    let start = Instant::now();
    let model = train(&data.train, &data.test, &TrainConfig::default()).expect("training succeeds");
    let elapsed = start.elapsed();
    let _ = model.save(cache_path());
    (model, elapsed)
}

/// The default-config model, loaded from the cache when it matches.
pub fn default_model(data: &Mnist) -> &'static TrainedModel {
    static MODEL: OnceLock<TrainedModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        if let Ok(m) = TrainedModel::load(cache_path()) {
            if m.metadata.config() == TrainConfig::default() {
                return m;
            }
        }
        train_default(data).0
    })
}
