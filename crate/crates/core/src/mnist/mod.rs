//! The MNIST experiment: IDX loading, training of a 784-100-10 sigmoid
//! classifier, and accuracy and SNR under noise.
//!
//! The dataset is never downloaded here. Point [`load_idx`] at the four
//! standard uncompressed files (`scripts/fetch_mnist.sh` fetches them).
//!
//! Noise is drawn at `(trial, timestep) = (presentation, image index)`, so
//! an image sees the same noise in every evaluation with the same seed
//! regardless of batching or thread count.

mod eval;
mod idx;
mod train;

pub use eval::{
    combined_fixed_plan, combined_plan, evaluate_accuracy, network_accuracy, output_snr_over_digits, DigitSnr,
    DigitSnrTable, NOISY_LAYERS,
};
pub use idx::{load_idx, load_mnist_dir, Dataset, Split, IMAGE_MAGIC, LABEL_MAGIC};
pub use train::{train, Loss, TrainConfig, TrainedModel, TrainingMetadata, HIDDEN, INPUTS, OUTPUTS};
