//! Versioned binary checkpoints for the full training state.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic        5 bytes   "EEDC1"
//! config_len   u32       then that many bytes of key=value text
//! step         u64       training step counter
//! opt_step     u64       optimizer step counter (0 when no state)
//! has_opt      u8        optimizer moments present?
//! center_len   u32       then that many f64 center components
//! num_tensors  u32
//! per tensor:  name_len u32 | name | ndim u32 | dims u32 × ndim | f32 × numel
//! checksum     32 bytes  SHA-256 over everything above
//! ```
//!
//! Tensor names are `student.<p>` and `teacher.<p>` for every canonical
//! parameter `<p>`, plus `opt.m.<p>` / `opt.v.<p>` when optimizer state
//! is included. Values are 32-bit; the center stays 64-bit.

use super::{DinoConfig, DinoError, DinoState, ModelParams};
use crate::config;
use crate::numlin::Tensor;
use crate::optim::{AdamW, AdamWConfig};
use crate::vit::ViTConfig;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"EEDC1";

const CHECKSUM_BYTES: usize = 32;

/// `(step, first moments, second moments)` in canonical parameter order.
pub type OptimizerState = (u64, Vec<Tensor<f32>>, Vec<Tensor<f32>>);

/// Everything a checkpoint holds.
pub struct Checkpoint {
    pub vit: ViTConfig,
    pub dino: DinoConfig,
    pub state: DinoState<f32>,
    /// Present when the checkpoint carried optimizer state.
    pub optimizer: Option<OptimizerState>,
}

impl Checkpoint {
    /// Rebuilds the optimizer, or a fresh one if no state was stored.
    pub fn optimizer_with(&self, cfg: AdamWConfig) -> AdamW<f32> {
        match &self.optimizer {
            Some((step, m, v)) => AdamW::from_state(cfg, *step, m.clone(), v.clone()),
            None => AdamW::new(cfg, &self.state.student.shapes()),
        }
    }
}

/// The flat key=value encoding of both configs, shared by checkpoints
/// and training config files.
pub fn configs_to_kv(vit: &ViTConfig, dino: &DinoConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("vit.image_size", vit.image_size.to_string());
    put("vit.patch_size", vit.patch_size.to_string());
    put("vit.embed_dim", vit.embed_dim.to_string());
    put("vit.num_layers", vit.num_layers.to_string());
    put("vit.num_heads", vit.num_heads.to_string());
    put("vit.mlp_ratio", vit.mlp_ratio.to_string());
    put("vit.include_cls_token", vit.include_cls_token.to_string());
    put("dino.out_dim", dino.out_dim.to_string());
    put("dino.head_hidden_dim", dino.head_hidden_dim.to_string());
    put("dino.head_bottleneck_dim", dino.head_bottleneck_dim.to_string());
    put("dino.student_temp", dino.student_temp.to_string());
    put("dino.teacher_temp", dino.teacher_temp.to_string());
    put("dino.teacher_momentum", dino.teacher_momentum.to_string());
    put("dino.center_momentum", dino.center_momentum.to_string());
    put("dino.num_local_crops", dino.num_local_crops.to_string());
    put("dino.global_crop_lo", dino.global_crop_scale.0.to_string());
    put("dino.global_crop_hi", dino.global_crop_scale.1.to_string());
    put("dino.local_crop_lo", dino.local_crop_scale.0.to_string());
    put("dino.local_crop_hi", dino.local_crop_scale.1.to_string());
    m
}

/// Inverse of [`configs_to_kv`]. Unknown keys are rejected so typos in
/// config files fail loudly.
pub fn configs_from_kv(
    map: &BTreeMap<String, String>,
) -> Result<(ViTConfig, DinoConfig), DinoError> {
    let known = configs_to_kv(&ViTConfig::desk(), &DinoConfig::desk());
    for key in map.keys() {
        if !known.contains_key(key) {
            return Err(DinoError::FormatError(format!("unknown config key {key:?}")));
        }
    }
    let get = |k: &str| -> Result<String, DinoError> {
        map.get(k)
            .cloned()
            .ok_or_else(|| DinoError::FormatError(format!("missing config key {k:?}")))
    };
    macro_rules! parsed {
        ($k:expr, $t:ty) => {
            get($k)?.parse::<$t>().map_err(|_| {
                DinoError::FormatError(format!("config key {:?} has a bad value", $k))
            })?
        };
    }
    let vit = ViTConfig {
        image_size: parsed!("vit.image_size", usize),
        patch_size: parsed!("vit.patch_size", usize),
        embed_dim: parsed!("vit.embed_dim", usize),
        num_layers: parsed!("vit.num_layers", usize),
        num_heads: parsed!("vit.num_heads", usize),
        mlp_ratio: parsed!("vit.mlp_ratio", usize),
        include_cls_token: parsed!("vit.include_cls_token", bool),
    };
    let dino = DinoConfig {
        out_dim: parsed!("dino.out_dim", usize),
        head_hidden_dim: parsed!("dino.head_hidden_dim", usize),
        head_bottleneck_dim: parsed!("dino.head_bottleneck_dim", usize),
        student_temp: parsed!("dino.student_temp", f64),
        teacher_temp: parsed!("dino.teacher_temp", f64),
        teacher_momentum: parsed!("dino.teacher_momentum", f64),
        center_momentum: parsed!("dino.center_momentum", f64),
        num_local_crops: parsed!("dino.num_local_crops", usize),
        global_crop_scale: (
            parsed!("dino.global_crop_lo", f64),
            parsed!("dino.global_crop_hi", f64),
        ),
        local_crop_scale: (
            parsed!("dino.local_crop_lo", f64),
            parsed!("dino.local_crop_hi", f64),
        ),
    };
    Ok((vit, dino))
}

fn push_tensor(bytes: &mut Vec<u8>, name: &str, t: &Tensor<f32>) {
    bytes.extend_from_slice(&(name.len() as u32).to_le_bytes());
    bytes.extend_from_slice(name.as_bytes());
    bytes.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
    for &d in t.shape() {
        bytes.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_checkpoint(
    path: &Path,
    vit: &ViTConfig,
    dino: &DinoConfig,
    state: &DinoState<f32>,
    optimizer: Option<&AdamW<f32>>,
) -> Result<(), DinoError> {
    state.validate()?;
    let config_text = config::write_kv(&configs_to_kv(vit, dino));
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&(config_text.len() as u32).to_le_bytes());
    bytes.extend_from_slice(config_text.as_bytes());
    bytes.extend_from_slice(&state.step.to_le_bytes());
    bytes.extend_from_slice(&optimizer.map_or(0, AdamW::step_count).to_le_bytes());
    bytes.push(optimizer.is_some() as u8);
    bytes.extend_from_slice(&(state.center.len() as u32).to_le_bytes());
    for c in &state.center {
        bytes.extend_from_slice(&c.to_le_bytes());
    }
    let mut tensors: Vec<(String, &Tensor<f32>)> = Vec::new();
    for (prefix, params) in [("student", &state.student), ("teacher", &state.teacher)] {
        for (name, t) in params.names().iter().zip(params.tensors()) {
            tensors.push((format!("{prefix}.{name}"), t));
        }
    }
    if let Some(opt) = optimizer {
        let (m, v) = opt.moments();
        for (kind, moments) in [("m", m), ("v", v)] {
            for (name, t) in state.student.names().iter().zip(moments) {
                tensors.push((format!("opt.{kind}.{name}"), t));
            }
        }
    }
    bytes.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in &tensors {
        push_tensor(&mut bytes, name, t);
    }
    let checksum = Sha256::digest(&bytes);
    bytes.extend_from_slice(&checksum);
    crate::data::atomic_write(path, &bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DinoError> {
        let end = self
            .offset
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| DinoError::FormatError("checkpoint truncated".into()))?;
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, DinoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DinoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, DinoError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 5 + CHECKSUM_BYTES || &bytes[..5] != CHECKPOINT_MAGIC {
        return Err(DinoError::FormatError("not a checkpoint file".into()));
    }
    let body = &bytes[..bytes.len() - CHECKSUM_BYTES];
    let stored = &bytes[bytes.len() - CHECKSUM_BYTES..];
    if Sha256::digest(body).as_slice() != stored {
        return Err(DinoError::ChecksumMismatch);
    }
    let mut r = Reader { bytes: body, offset: 5 };
    let config_len = r.u32()? as usize;
    let config_text = std::str::from_utf8(r.take(config_len)?)
        .map_err(|_| DinoError::FormatError("config block is not UTF-8".into()))?;
    let map = config::parse_kv(config_text)
        .map_err(|e| DinoError::FormatError(format!("config block: {e}")))?;
    let (vit, dino) = configs_from_kv(&map)?;
    let step = r.u64()?;
    let opt_step = r.u64()?;
    let has_opt = match r.take(1)?[0] {
        0 => false,
        1 => true,
        other => return Err(DinoError::FormatError(format!("optimizer flag byte {other}"))),
    };
    let center_len = r.u32()? as usize;
    let mut center = Vec::with_capacity(center_len);
    for _ in 0..center_len {
        center.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
    }
    let num_tensors = r.u32()? as usize;
    let mut named: BTreeMap<String, Tensor<f32>> = BTreeMap::new();
    for _ in 0..num_tensors {
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| DinoError::FormatError("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = r.take(numel * 4)?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if named
            .insert(name.clone(), Tensor::from_vec_unchecked(shape, data))
            .is_some()
        {
            return Err(DinoError::FormatError(format!("duplicate tensor {name:?}")));
        }
    }
    if r.offset != body.len() {
        return Err(DinoError::FormatError("trailing bytes after tensors".into()));
    }

    let mut split = |prefix: &str| -> BTreeMap<String, Tensor<f32>> {
        let keys: Vec<String> = named
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect();
        keys.into_iter()
            .map(|k| {
                let t = named.remove(&k).unwrap();
                (k[prefix.len()..].to_string(), t)
            })
            .collect()
    };
    let student = ModelParams::from_named(&vit, &dino, split("student."))?;
    let teacher = ModelParams::from_named(&vit, &dino, split("teacher."))?;
    let optimizer = if has_opt {
        let mut m_named = split("opt.m.");
        let mut v_named = split("opt.v.");
        let mut m = Vec::with_capacity(student.names().len());
        let mut v = Vec::with_capacity(student.names().len());
        for name in student.names() {
            let take = |map: &mut BTreeMap<String, Tensor<f32>>, kind: &str| {
                map.remove(name).ok_or_else(|| {
                    DinoError::FormatError(format!("missing optimizer tensor opt.{kind}.{name}"))
                })
            };
            m.push(take(&mut m_named, "m")?);
            v.push(take(&mut v_named, "v")?);
        }
        Some((opt_step, m, v))
    } else {
        None
    };
    if let Some(extra) = named.into_keys().next() {
        return Err(DinoError::FormatError(format!("unexpected tensor {extra:?}")));
    }
    if center.len() != dino.out_dim {
        return Err(DinoError::FormatError(format!(
            "center has {} entries, config says {}",
            center.len(),
            dino.out_dim
        )));
    }

    let state = DinoState { student, teacher, center, step };
    state.validate()?;
    Ok(Checkpoint { vit, dino, state, optimizer })
}
