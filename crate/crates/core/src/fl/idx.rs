//! Reader for the big-endian IDX format used by the MNIST distribution.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fl::Dataset;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn idx_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Idx {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_error(path, "truncated header"))
}

/// Parses an image file and its label file into a dataset with pixels
/// scaled to `[0, 1]`.
pub fn load_idx(images: &Path, labels: &Path, classes: usize) -> Result<Dataset> {
    let read = |p: &Path| fs::read(p).map_err(|e| idx_error(p, format!("cannot read IDX file: {e}")));
    let img = read(images)?;
    let lab = read(labels)?;
    if read_u32(&img, 0, images)? != IMAGES_MAGIC {
        return Err(idx_error(images, "bad magic for an image file"));
    }
    if read_u32(&lab, 0, labels)? != LABELS_MAGIC {
        return Err(idx_error(labels, "bad magic for a label file"));
    }
    let n = read_u32(&img, 4, images)? as usize;
    let rows = read_u32(&img, 8, images)? as usize;
    let cols = read_u32(&img, 12, images)? as usize;
    let n_labels = read_u32(&lab, 4, labels)? as usize;
    if n != n_labels {
        return Err(idx_error(labels, format!("{n_labels} labels for {n} images")));
    }
    let dim = rows * cols;
    let pixels = img
        .get(16..16 + n * dim)
        .ok_or_else(|| idx_error(images, "truncated pixel data"))?;
    let ys = lab.get(8..8 + n).ok_or_else(|| idx_error(labels, "truncated label data"))?;
    let features = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let ys = ys.iter().map(|&y| y as usize).collect();
    let name = images.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Dataset::new(features, ys, dim, classes, name)
}

/// Loads `train-images-idx3-ubyte` / `train-labels-idx1-ubyte` (or the
/// `t10k` pair when `train` is false) from an MNIST directory.
pub fn load_mnist_dir(dir: &Path, train: bool) -> Result<Dataset> {
    let prefix = if train { "train" } else { "t10k" };
    load_idx(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        &dir.join(format!("{prefix}-labels-idx1-ubyte")),
        10,
    )
}
