use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Images scaled to `[0, 1]`, one per row, with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    pub fn new(images: Array2<f64>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if images.nrows() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} images but {} labels",
                images.nrows(),
                labels.len()
            )));
        }
        if images.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("pixel outside [0, 1]".into()));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::InvalidArgument(format!("label {l} outside 0..=9")));
        }
        Ok(Dataset { images, labels, split })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Pixels per image.
    pub fn width(&self) -> usize {
        self.images.ncols()
    }

    pub fn image(&self, i: usize) -> ArrayView1<'_, f64> {
        self.images.row(i)
    }

    /// The first `n` examples (or all of them if there are fewer).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images.slice(s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
            split: self.split,
        }
    }
}

fn idx_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads an IDX file, checks its magic and returns `(dims, payload)`.
fn read_idx(path: &Path, magic: u32) -> Result<(Vec<usize>, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| idx_error(path, e.to_string()))?;
    if bytes.len() < 4 {
        return Err(idx_error(path, "truncated: no magic number"));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let found = word(0);
    if found != magic {
        return Err(idx_error(
            path,
            format!("bad magic 0x{found:08x}, expected 0x{magic:08x}"),
        ));
    }
    let ndims = (magic & 0xff) as usize;
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(idx_error(path, "truncated: incomplete header"));
    }
    let dims: Vec<usize> = (0..ndims).map(|d| word(4 + 4 * d) as usize).collect();
    let expected: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(idx_error(
            path,
            format!(
                "truncated: header declares {expected} bytes of data, file has {}",
                payload.len()
            ),
        ));
    }
    Ok((dims, payload[..expected].to_vec()))
}

/// Loads an image file and its label file.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    let (idims, pixels) = read_idx(images, IMAGE_MAGIC)?;
    let (ldims, label_bytes) = read_idx(labels, LABEL_MAGIC)?;
    if idims[0] != ldims[0] {
        return Err(idx_error(
            labels,
            format!(
                "count mismatch: {} images in {} but {} labels",
                idims[0],
                images.display(),
                ldims[0]
            ),
        ));
    }
    if let Some(l) = label_bytes.iter().find(|&&l| l > 9) {
        return Err(idx_error(labels, format!("label {l} outside 0..=9")));
    }
    let width = idims[1] * idims[2];
    let data = pixels.into_iter().map(|p| f64::from(p) / 255.0).collect();
    let images = Array2::from_shape_vec((idims[0], width), data).expect("size checked against header");
    Ok(Dataset {
        images,
        labels: label_bytes,
        split,
    })
}

/// Loads `(train, test)` from a directory holding the four standard files.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset)> {
    let dir = dir.as_ref();
    let p = |name: &str| -> PathBuf { dir.join(name) };
    let train = load_idx(p("train-images-idx3-ubyte"), p("train-labels-idx1-ubyte"), Split::Train)?;
    let test = load_idx(p("t10k-images-idx3-ubyte"), p("t10k-labels-idx1-ubyte"), Split::Test)?;
    Ok((train, test))
}
