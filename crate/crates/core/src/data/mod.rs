//! Datasets and artifact persistence: synthetic texture-centric and
//! object-centric generators, the CIFAR-100 binary loader, and the
//! checksummed activation-dump and dataset file formats.
//!
//! Images are `[H, W·3]` tensors, row-major with channels fastest, values
//! in `[0, 1]` quantized to the 8-bit grid (`k/255`) so that in-memory
//! corpora and corpora round-tripped through dataset files are identical.

mod cifar;
mod dataset_io;
mod dump;
mod synth;

pub use cifar::load_cifar100;
pub use dataset_io::{read_dataset, write_dataset};
pub use dump::{read_dump, write_dump, ActivationDump, DUMP_MAGIC};
pub use synth::{
    autocorrelation_length, gen_object_dataset, gen_object_dataset_with_masks,
    gen_texture_dataset, mean_autocorrelation_length, OBJECT_CLASSES, TEXTURE_CLASSES,
};

use crate::numlin::Tensor;
use std::path::Path;
use thiserror::Error;

pub const IMAGE_CHANNELS: usize = crate::vit::IMAGE_CHANNELS;

/// Writes the whole buffer to a sibling temp file and renames it over the
/// target, so a failed or interrupted write never leaves a partial artifact
/// at the final path.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "artifact".into());
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    FormatError(String),
    #[error("checksum mismatch: file is corrupt")]
    ChecksumMismatch,
    #[error("invalid dataset: {0}")]
    Validation(String),
}

/// An immutable corpus of equally sized RGB images in `[0, 1]`.
///
/// Labels are optional; DINO never reads them, but the synthetic
/// generators attach class ids so sanity probes can check what signal
/// carries the label.
#[derive(Debug, Clone)]
pub struct ImageDataset {
    pub images: Vec<Tensor<f32>>,
    pub labels: Option<Vec<u32>>,
    pub source: String,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Side length of the (square) images.
    pub fn image_size(&self) -> usize {
        self.images.first().map_or(0, |im| im.rows())
    }

    /// Checks the type invariants: uniform square shapes, values in [0,1],
    /// label count matching image count.
    pub fn validate(&self) -> Result<(), DataError> {
        let size = self.image_size();
        for (i, im) in self.images.iter().enumerate() {
            if im.rows() != size || im.cols() != size * IMAGE_CHANNELS {
                return Err(DataError::Validation(format!(
                    "image {i} has shape {:?}, expected [{size}, {}]",
                    im.shape(),
                    size * IMAGE_CHANNELS
                )));
            }
            if im.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(DataError::Validation(format!(
                    "image {i} has values outside [0, 1]"
                )));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.images.len() {
                return Err(DataError::Validation(format!(
                    "{} labels for {} images",
                    labels.len(),
                    self.images.len()
                )));
            }
        }
        Ok(())
    }
}

/// Snaps a unit-interval value to the 8-bit grid.
pub(crate) fn quantize_unit(v: f32) -> f32 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}
