//! Checksummed binary persistence for captured layer activations.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      5 bytes   "EEDV1" (name carries the version)
//! config     u64       model config hash
//! layers     u32       number of captured layers
//! rows       u32       token rows per layer
//! dim        u32       embedding width
//! indices    layers × u32
//! blocks     layers × rows × dim × f32
//! checksum   32 bytes  SHA-256 over everything above
//! ```
//!
//! Activations are stored in 32 bits; analysis upcasts on read.

use super::DataError;
use crate::numlin::Tensor;
use crate::vit::LayerActivations;
use sha2::{Digest, Sha256};
use std::path::Path;

pub const DUMP_MAGIC: &[u8; 5] = b"EEDV1";

const CHECKSUM_BYTES: usize = 32;
const FIXED_HEADER_BYTES: usize = 5 + 8 + 4 + 4 + 4;

/// On-disk capture of per-layer token embeddings, decoupling training
/// from analysis.
#[derive(Debug, Clone)]
pub struct ActivationDump {
    pub config_hash: u64,
    pub layers: Vec<LayerActivations<f32>>,
}

pub fn write_dump(
    path: &Path,
    config_hash: u64,
    layers: &[LayerActivations<f32>],
) -> Result<(), DataError> {
    if layers.is_empty() {
        return Err(DataError::Validation("dump needs at least one layer".into()));
    }
    let rows = layers[0].tokens.rows();
    let dim = layers[0].tokens.cols();
    for l in layers {
        if l.tokens.rows() != rows || l.tokens.cols() != dim {
            return Err(DataError::Validation(format!(
                "layer {} block is {:?}, expected [{rows}, {dim}]",
                l.layer_index,
                l.tokens.shape()
            )));
        }
    }
    let mut bytes = Vec::with_capacity(
        FIXED_HEADER_BYTES + layers.len() * (4 + rows * dim * 4) + CHECKSUM_BYTES,
    );
    bytes.extend_from_slice(DUMP_MAGIC);
    bytes.extend_from_slice(&config_hash.to_le_bytes());
    bytes.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(rows as u32).to_le_bytes());
    bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    for l in layers {
        bytes.extend_from_slice(&(l.layer_index as u32).to_le_bytes());
    }
    for l in layers {
        for v in l.tokens.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let checksum = Sha256::digest(&bytes);
    bytes.extend_from_slice(&checksum);
    super::atomic_write(path, &bytes)?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<ActivationDump, DataError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < FIXED_HEADER_BYTES + CHECKSUM_BYTES {
        return Err(DataError::FormatError(format!(
            "{} bytes is too short for a dump header",
            bytes.len()
        )));
    }
    if &bytes[..5] != DUMP_MAGIC {
        return Err(DataError::FormatError("bad magic".into()));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let config_hash = u64_at(5);
    let num_layers = u32_at(13) as usize;
    let rows = u32_at(17) as usize;
    let dim = u32_at(21) as usize;
    if num_layers == 0 || rows == 0 || dim == 0 {
        return Err(DataError::FormatError("empty dimension in header".into()));
    }
    let expected = FIXED_HEADER_BYTES
        + num_layers * 4
        + num_layers
            .checked_mul(rows * dim * 4)
            .ok_or_else(|| DataError::FormatError("header sizes overflow".into()))?
        + CHECKSUM_BYTES;
    if bytes.len() != expected {
        return Err(DataError::FormatError(format!(
            "file is {} bytes but header implies {expected}",
            bytes.len()
        )));
    }
    let body = &bytes[..bytes.len() - CHECKSUM_BYTES];
    let stored = &bytes[bytes.len() - CHECKSUM_BYTES..];
    if Sha256::digest(body).as_slice() != stored {
        return Err(DataError::ChecksumMismatch);
    }
    let mut offset = FIXED_HEADER_BYTES;
    let mut indices = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        indices.push(u32_at(offset) as usize);
        offset += 4;
    }
    let mut layers = Vec::with_capacity(num_layers);
    for layer_index in indices {
        let mut data = Vec::with_capacity(rows * dim);
        for _ in 0..rows * dim {
            data.push(f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()));
            offset += 4;
        }
        layers.push(LayerActivations {
            layer_index,
            tokens: Tensor::from_vec_unchecked(vec![rows, dim], data),
        });
    }
    Ok(ActivationDump { config_hash, layers })
}
