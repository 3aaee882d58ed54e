//! Checksummed binary persistence for image datasets.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic       5 bytes   "EEDS1"
//! n           u32       image count
//! size        u32       image height == width
//! source_len  u32       then that many bytes of UTF-8 source tag
//! has_labels  u8        0 or 1
//! labels      n × u32   only when has_labels = 1
//! pixels      n × size × size × 3 × u8   HWC, value = round(v·255)
//! checksum    32 bytes  SHA-256 over everything above
//! ```
//!
//! Pixels are stored on the u8 grid. Generators quantize to the same grid
//! at creation time, so writing and re-reading a generated corpus is
//! bit-exact.

use super::{quantize_unit, DataError, ImageDataset, IMAGE_CHANNELS};
use crate::numlin::Tensor;
use sha2::{Digest, Sha256};
use std::path::Path;

const DATASET_MAGIC: &[u8; 5] = b"EEDS1";
const CHECKSUM_BYTES: usize = 32;

pub fn write_dataset(path: &Path, ds: &ImageDataset) -> Result<(), DataError> {
    ds.validate()?;
    if ds.is_empty() {
        return Err(DataError::Validation("refusing to write empty dataset".into()));
    }
    let size = ds.image_size();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(DATASET_MAGIC);
    bytes.extend_from_slice(&(ds.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(size as u32).to_le_bytes());
    bytes.extend_from_slice(&(ds.source.len() as u32).to_le_bytes());
    bytes.extend_from_slice(ds.source.as_bytes());
    bytes.push(ds.labels.is_some() as u8);
    if let Some(labels) = &ds.labels {
        for l in labels {
            bytes.extend_from_slice(&l.to_le_bytes());
        }
    }
    for im in &ds.images {
        for &v in im.data() {
            bytes.push((v * 255.0).round() as u8);
        }
    }
    let checksum = Sha256::digest(&bytes);
    bytes.extend_from_slice(&checksum);
    super::atomic_write(path, &bytes)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<ImageDataset, DataError> {
    let bytes = std::fs::read(path)?;
    let too_short =
        || DataError::FormatError(format!("{} bytes is too short", bytes.len()));
    if bytes.len() < 5 + 4 + 4 + 4 + 1 + CHECKSUM_BYTES {
        return Err(too_short());
    }
    if &bytes[..5] != DATASET_MAGIC {
        return Err(DataError::FormatError("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let n = u32_at(5) as usize;
    let size = u32_at(9) as usize;
    let source_len = u32_at(13) as usize;
    if n == 0 || size == 0 {
        return Err(DataError::FormatError("empty dimension in header".into()));
    }
    let pixels_per_image = size * size * IMAGE_CHANNELS;
    let label_region = |has: bool| if has { n * 4 } else { 0 };
    let expected = |has: bool| {
        17usize + source_len + 1 + label_region(has) + n * pixels_per_image + CHECKSUM_BYTES
    };
    let flag_offset = 17 + source_len;
    if bytes.len() <= flag_offset {
        return Err(too_short());
    }
    let has_labels = match bytes[flag_offset] {
        0 => false,
        1 => true,
        other => {
            return Err(DataError::FormatError(format!("label flag byte {other}")))
        }
    };
    if bytes.len() != expected(has_labels) {
        return Err(DataError::FormatError(format!(
            "file is {} bytes but header implies {}",
            bytes.len(),
            expected(has_labels)
        )));
    }
    let body = &bytes[..bytes.len() - CHECKSUM_BYTES];
    let stored = &bytes[bytes.len() - CHECKSUM_BYTES..];
    if Sha256::digest(body).as_slice() != stored {
        return Err(DataError::ChecksumMismatch);
    }
    let source = String::from_utf8(bytes[17..17 + source_len].to_vec())
        .map_err(|_| DataError::FormatError("source tag is not UTF-8".into()))?;
    let mut offset = flag_offset + 1;
    let labels = if has_labels {
        let mut ls = Vec::with_capacity(n);
        for _ in 0..n {
            ls.push(u32_at(offset));
            offset += 4;
        }
        Some(ls)
    } else {
        None
    };
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        let data: Vec<f32> = bytes[offset..offset + pixels_per_image]
            .iter()
            .map(|&b| quantize_unit(b as f32 / 255.0))
            .collect();
        offset += pixels_per_image;
        images.push(Tensor::from_vec_unchecked(
            vec![size, size * IMAGE_CHANNELS],
            data,
        ));
    }
    let ds = ImageDataset { images, labels, source };
    ds.validate()?;
    Ok(ds)
}
