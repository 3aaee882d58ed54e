//! Loader for the CIFAR-100 binary format.
//!
//! Each record is 3074 bytes: one coarse label, one fine label, then 3072
//! pixel bytes stored as full planes (1024 red, 1024 green, 1024 blue),
//! each plane row-major. We keep the fine label and interleave the planes
//! into HWC order scaled to `[0, 1]`.

use super::{DataError, ImageDataset, IMAGE_CHANNELS};
use crate::numlin::Tensor;
use std::path::Path;

const CIFAR_SIZE: usize = 32;
const PLANE: usize = CIFAR_SIZE * CIFAR_SIZE;
const RECORD_BYTES: usize = 2 + PLANE * IMAGE_CHANNELS;

pub fn load_cifar100(path: &Path) -> Result<ImageDataset, DataError> {
    let bytes = std::fs::read(path)?;
    if bytes.is_empty() || bytes.len() % RECORD_BYTES != 0 {
        return Err(DataError::FormatError(format!(
            "{} bytes is not a whole number of {RECORD_BYTES}-byte records",
            bytes.len()
        )));
    }
    let n = bytes.len() / RECORD_BYTES;
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for rec in bytes.chunks_exact(RECORD_BYTES) {
        labels.push(rec[1] as u32);
        let planes = &rec[2..];
        let mut data = Vec::with_capacity(PLANE * IMAGE_CHANNELS);
        for i in 0..PLANE {
            for c in 0..IMAGE_CHANNELS {
                data.push(planes[c * PLANE + i] as f32 / 255.0);
            }
        }
        images.push(Tensor::from_vec_unchecked(
            vec![CIFAR_SIZE, CIFAR_SIZE * IMAGE_CHANNELS],
            data,
        ));
    }
    let ds = ImageDataset {
        images,
        labels: Some(labels),
        source: format!("cifar100({})", path.display()),
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_records(records: &[Vec<u8>]) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        let flat: Vec<u8> = records.iter().flatten().copied().collect();
        std::fs::write(f.path(), flat).unwrap();
        f
    }

    #[test]
    fn decodes_plane_layout_into_hwc() {
        // first record: distinctive values at plane starts; second: all zero
        let mut rec = vec![0u8; RECORD_BYTES];
        rec[0] = 9; // coarse label, ignored
        rec[1] = 42; // fine label
        rec[2] = 10; // R(0,0)
        rec[2 + PLANE] = 20; // G(0,0)
        rec[2 + 2 * PLANE] = 30; // B(0,0)
        rec[2 + 1] = 55; // R(0,1)
        let zero = vec![0u8; RECORD_BYTES];
        let f = write_records(&[rec, zero]);

        let ds = load_cifar100(f.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels.as_ref().unwrap(), &[42, 0]);
        let im = &ds.images[0];
        assert_eq!(im.shape(), &[32, 96]);
        assert_eq!(im.get2(0, 0), 10.0 / 255.0);
        assert_eq!(im.get2(0, 1), 20.0 / 255.0);
        assert_eq!(im.get2(0, 2), 30.0 / 255.0);
        assert_eq!(im.get2(0, 3), 55.0 / 255.0);
        assert_eq!(im.get2(0, 4), 0.0);
        assert!(ds.images[1].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_truncated_file() {
        let f = write_records(&[vec![0u8; RECORD_BYTES - 1]]);
        match load_cifar100(f.path()) {
            Err(DataError::FormatError(_)) => {}
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_file() {
        let f = write_records(&[]);
        assert!(matches!(
            load_cifar100(f.path()),
            Err(DataError::FormatError(_))
        ));
    }
}
