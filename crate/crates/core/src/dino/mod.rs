//! DINO self-distillation: multi-crop views, student/teacher networks,
//! the cross-entropy distillation loss, teacher EMA and output centering.
//!
//! The student sees every view; the teacher sees only the two global
//! views and never receives gradient. The teacher runs on its own tape,
//! so isolation is structural rather than enforced by masking. Collapse
//! is held off by centering (subtracting a running mean of teacher
//! logits) plus sharpening (a teacher temperature below the student's);
//! sharpening keeps its bite because the head's output prototypes are
//! weight-normalized, making logit scale independent of weight norms.

mod augment;
mod checkpoint;
mod train;

pub use augment::multi_crop;
pub use checkpoint::{
    configs_from_kv, configs_to_kv, read_checkpoint, write_checkpoint, Checkpoint,
    OptimizerState, CHECKPOINT_MAGIC,
};
pub use train::{metrics_csv, train, train_from, MetricsRow, TrainOptions, TrainOutput};

use crate::autodiff::{Graph, VarId};
use crate::data::DataError;
use crate::numlin::{Real, Tensor};
use crate::seed;
use crate::vit::{
    forward_on_tape, trunc_normal_tensor, BoundParams, ParameterSet, ViTConfig, ViTError,
};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// Epsilon in the head's L2 bottleneck normalization.
const HEAD_NORM_EPS: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum DinoError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss became non-finite at step {step}: {diagnostic}")]
    NonFiniteLoss { step: u64, diagnostic: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Vit(#[from] ViTError),
    #[error("checkpoint format: {0}")]
    FormatError(String),
    #[error("checkpoint checksum mismatch")]
    ChecksumMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<DataError> for DinoError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(e) => DinoError::Io(e),
            DataError::FormatError(m) => DinoError::FormatError(m),
            DataError::ChecksumMismatch => DinoError::ChecksumMismatch,
            DataError::Validation(m) => DinoError::InvalidConfig(m),
        }
    }
}

/// DINO hyperparameters. Temperatures implement sharpening (teacher
/// colder than student); momenta drive the teacher EMA and the center's
/// running mean. Crop scales are fractions of image area.
///
/// The teacher temperature follows a linear schedule from
/// `teacher_temp` to `teacher_temp_final` over the first
/// `teacher_temp_warmup_steps` optimizer steps: a cold start gives
/// sharpening enough bite to pull structure out of the near-uniform
/// initial logits, and the warmer hold value keeps the run from sliding
/// into single-prototype collapse once structure exists. Equal
/// endpoints give a constant temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct DinoConfig {
    pub out_dim: usize,
    pub head_hidden_dim: usize,
    pub head_bottleneck_dim: usize,
    pub student_temp: f64,
    pub teacher_temp: f64,
    pub teacher_temp_final: f64,
    pub teacher_temp_warmup_steps: u64,
    pub teacher_momentum: f64,
    pub center_momentum: f64,
    pub num_local_crops: usize,
    pub global_crop_scale: (f64, f64),
    pub local_crop_scale: (f64, f64),
}

impl DinoConfig {
    /// Desk-scale defaults paired with [`ViTConfig::desk`].
    pub fn desk() -> Self {
        Self {
            out_dim: 256,
            head_hidden_dim: 128,
            head_bottleneck_dim: 64,
            student_temp: 0.1,
            teacher_temp: 0.04,
            teacher_temp_final: 0.07,
            teacher_temp_warmup_steps: 600,
            teacher_momentum: 0.996,
            center_momentum: 0.9,
            num_local_crops: 2,
            global_crop_scale: (0.5, 1.0),
            local_crop_scale: (0.15, 0.45),
        }
    }

    /// Full-scale defaults (reference values; not exercised in tests).
    pub fn full_scale() -> Self {
        Self {
            out_dim: 4096,
            head_hidden_dim: 2048,
            head_bottleneck_dim: 256,
            // 30 epochs of 1250 steps at the reference batch size
            teacher_temp_warmup_steps: 37_500,
            num_local_crops: 4,
            global_crop_scale: (0.4, 1.0),
            local_crop_scale: (0.05, 0.4),
            ..Self::desk()
        }
    }

    /// Teacher temperature at a given optimizer step.
    pub fn teacher_temp_at(&self, step: u64) -> f64 {
        if step >= self.teacher_temp_warmup_steps {
            return self.teacher_temp_final;
        }
        let f = step as f64 / self.teacher_temp_warmup_steps as f64;
        self.teacher_temp + f * (self.teacher_temp_final - self.teacher_temp)
    }

    pub fn validate(&self) -> Result<(), DinoError> {
        if self.out_dim < 2 || self.head_hidden_dim == 0 || self.head_bottleneck_dim == 0 {
            return Err(DinoError::InvalidConfig("head dims must be positive".into()));
        }
        for (name, t) in [
            ("teacher_temp", self.teacher_temp),
            ("teacher_temp_final", self.teacher_temp_final),
        ] {
            if !(t > 0.0 && t < self.student_temp) {
                return Err(DinoError::InvalidConfig(format!(
                    "need 0 < {name} < student_temp, got {t} vs {}",
                    self.student_temp
                )));
            }
        }
        for (name, m) in [
            ("teacher_momentum", self.teacher_momentum),
            ("center_momentum", self.center_momentum),
        ] {
            if !(m > 0.0 && m < 1.0) {
                return Err(DinoError::InvalidConfig(format!("{name} {m} outside (0,1)")));
            }
        }
        for (name, (lo, hi)) in [
            ("global_crop_scale", self.global_crop_scale),
            ("local_crop_scale", self.local_crop_scale),
        ] {
            if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
                return Err(DinoError::InvalidConfig(format!(
                    "{name} ({lo}, {hi}) not within (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Local crops are resized to half the model resolution; the grid
    /// must still tile into whole patches.
    pub fn local_image_size(&self, vit: &ViTConfig) -> usize {
        vit.image_size / 2
    }

    /// Cross-config checks that only make sense against a backbone.
    pub fn validate_with(&self, vit: &ViTConfig) -> Result<(), DinoError> {
        self.validate()?;
        vit.validate()?;
        let local = self.local_image_size(vit);
        if self.num_local_crops > 0 && (local == 0 || !local.is_multiple_of(vit.patch_size)) {
            return Err(DinoError::InvalidConfig(format!(
                "local view size {local} does not tile into {} px patches",
                vit.patch_size
            )));
        }
        Ok(())
    }
}

/// `(name, shape)` pairs of the projection head, in canonical order:
/// a 3-layer GELU MLP into an L2-normalized bottleneck, then a final
/// linear map (no bias) onto unit-norm output prototypes.
pub fn head_parameters(embed_dim: usize, cfg: &DinoConfig) -> Vec<(String, Vec<usize>)> {
    let (h, b, k) = (cfg.head_hidden_dim, cfg.head_bottleneck_dim, cfg.out_dim);
    vec![
        ("head.w1".into(), vec![embed_dim, h]),
        ("head.b1".into(), vec![1, h]),
        ("head.w2".into(), vec![h, h]),
        ("head.b2".into(), vec![1, h]),
        ("head.w3".into(), vec![h, b]),
        ("head.b3".into(), vec![1, b]),
        ("head.w_out".into(), vec![b, k]),
    ]
}

/// Backbone plus projection head, stored as one flat named list so the
/// optimizer, EMA and checkpoints all share a single canonical order.
#[derive(Debug, Clone)]
pub struct ModelParams<T: Real> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
    backbone_len: usize,
}

impl<T: Real> ModelParams<T> {
    pub fn init(vit_cfg: &ViTConfig, dino_cfg: &DinoConfig, rng: &mut ChaCha12Rng) -> Self {
        let local = (dino_cfg.num_local_crops > 0).then(|| dino_cfg.local_image_size(vit_cfg));
        let backbone = ParameterSet::<T>::init(vit_cfg, local, rng);
        let backbone_len = backbone.len();
        let mut names: Vec<String> = backbone.names().to_vec();
        let mut tensors: Vec<Tensor<T>> = backbone.tensors().to_vec();
        for (name, shape) in head_parameters(vit_cfg.embed_dim, dino_cfg) {
            let tensor = if name.starts_with("head.b") {
                Tensor::zeros(shape)
            } else {
                trunc_normal_tensor(shape, rng)
            };
            names.push(name);
            tensors.push(tensor);
        }
        Self { names, tensors, backbone_len }
    }

    /// Rebuilds from named tensors, validating against both configs
    /// (checkpoint load path).
    pub fn from_named(
        vit_cfg: &ViTConfig,
        dino_cfg: &DinoConfig,
        mut named: BTreeMap<String, Tensor<T>>,
    ) -> Result<Self, DinoError> {
        let mut head_named = BTreeMap::new();
        for (name, _) in head_parameters(vit_cfg.embed_dim, dino_cfg) {
            let t = named
                .remove(&name)
                .ok_or_else(|| ViTError::MissingParameter(name.clone()))?;
            head_named.insert(name, t);
        }
        let local = (dino_cfg.num_local_crops > 0).then(|| dino_cfg.local_image_size(vit_cfg));
        let backbone = ParameterSet::from_named(vit_cfg, local, named)?;
        let backbone_len = backbone.len();
        let mut names: Vec<String> = backbone.names().to_vec();
        let mut tensors: Vec<Tensor<T>> = backbone.tensors().to_vec();
        for (name, shape) in head_parameters(vit_cfg.embed_dim, dino_cfg) {
            let tensor = head_named.remove(&name).unwrap();
            if tensor.shape() != shape.as_slice() {
                return Err(DinoError::ShapeMismatch(format!(
                    "{name}: expected {shape:?}, got {:?}",
                    tensor.shape()
                )));
            }
            names.push(name);
            tensors.push(tensor);
        }
        Ok(Self { names, tensors, backbone_len })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn shapes(&self) -> Vec<&[usize]> {
        self.tensors.iter().map(|t| t.shape()).collect()
    }

    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            backbone_len: self.backbone_len,
        }
    }

    /// Clones the backbone subset out as a [`ParameterSet`] for analysis
    /// paths that run the plain feature forward.
    pub fn backbone_parameter_set(
        &self,
        vit_cfg: &ViTConfig,
        dino_cfg: &DinoConfig,
    ) -> Result<ParameterSet<T>, DinoError> {
        let named: BTreeMap<String, Tensor<T>> = self.names[..self.backbone_len]
            .iter()
            .cloned()
            .zip(self.tensors[..self.backbone_len].iter().cloned())
            .collect();
        let local = (dino_cfg.num_local_crops > 0).then(|| dino_cfg.local_image_size(vit_cfg));
        Ok(ParameterSet::from_named(vit_cfg, local, named)?)
    }

    /// Places every tensor on a tape; leaves when `trainable`, constants
    /// otherwise (the teacher path).
    pub fn bind(&self, g: &mut Graph<T>, trainable: bool) -> BoundModel {
        let ids: Vec<VarId> = self
            .tensors
            .iter()
            .map(|t| {
                if trainable {
                    g.leaf(t.clone())
                } else {
                    g.constant(t.clone())
                }
            })
            .collect();
        let backbone = BoundParams::from_pairs(
            self.names[..self.backbone_len]
                .iter()
                .cloned()
                .zip(ids[..self.backbone_len].iter().copied()),
        );
        let h = &ids[self.backbone_len..];
        BoundModel {
            backbone,
            head: HeadIds {
                w1: h[0],
                b1: h[1],
                w2: h[2],
                b2: h[3],
                w3: h[4],
                b3: h[5],
                w_out: h[6],
            },
            all_ids: ids,
        }
    }
}

/// Tape handles for one bound projection head.
#[derive(Debug, Clone, Copy)]
pub struct HeadIds {
    pub w1: VarId,
    pub b1: VarId,
    pub w2: VarId,
    pub b2: VarId,
    pub w3: VarId,
    pub b3: VarId,
    pub w_out: VarId,
}

/// Tape handles for one bound model, with `all_ids` in the canonical
/// parameter order (gradient collection).
pub struct BoundModel {
    pub backbone: BoundParams,
    pub head: HeadIds,
    pub all_ids: Vec<VarId>,
}

/// Projection head forward: `[R, D]` features to `[R, out_dim]` logits.
///
/// The output layer is weight-normalized with the gain pinned at one:
/// each prototype (column of `w_out`) acts through its direction only,
/// so logits are cosine similarities between the normalized bottleneck
/// and the prototypes. Pinning the scale keeps teacher sharpening
/// effective from the first step and removes the collapse shortcut of
/// shrinking the output weights until every view looks alike.
pub fn head_forward<T: Real>(g: &mut Graph<T>, head: &HeadIds, x: VarId) -> VarId {
    let h = g.matmul(x, head.w1);
    let h = g.add_row(h, head.b1);
    let h = g.gelu(h);
    let h = g.matmul(h, head.w2);
    let h = g.add_row(h, head.b2);
    let h = g.gelu(h);
    let z = g.matmul(h, head.w3);
    let z = g.add_row(z, head.b3);
    let zn = g.l2norm_rows(z, HEAD_NORM_EPS);
    let wt = g.transpose(head.w_out);
    let wn = g.l2norm_rows(wt, HEAD_NORM_EPS);
    let prototypes = g.transpose(wn);
    g.matmul(zn, prototypes)
}

/// Full forward for one view: backbone features, then the CLS embedding
/// (or mean token when no CLS is configured) through the head. Returns
/// `[1, out_dim]` logits.
pub fn view_logits<T: Real>(
    g: &mut Graph<T>,
    vit_cfg: &ViTConfig,
    model: &BoundModel,
    pixels: &Tensor<T>,
) -> Result<VarId, ViTError> {
    let (features, _) = forward_on_tape(g, vit_cfg, &model.backbone, pixels, &[])?;
    let pooled = if vit_cfg.include_cls_token {
        g.slice_rows(features, 0, 1)
    } else {
        let n = g.value(features).rows();
        let w = g.constant(Tensor::full(vec![1, n], T::from_f64(1.0 / n as f64)));
        g.matmul(w, features)
    };
    Ok(head_forward(g, &model.head, pooled))
}

/// Teacher distribution for one view: `softmax((z − c) / teacher_temp)`
/// row-wise, computed away from any tape so it can never leak gradient.
pub fn teacher_probabilities(
    logits: &Tensor<f64>,
    center: &[f64],
    teacher_temp: f64,
) -> Result<Tensor<f64>, DinoError> {
    if logits.cols() != center.len() {
        return Err(DinoError::ShapeMismatch(format!(
            "teacher logits have {} columns, center has {}",
            logits.cols(),
            center.len()
        )));
    }
    let (r, k) = (logits.rows(), logits.cols());
    let mut out = Vec::with_capacity(r * k);
    for i in 0..r {
        let row = logits.row(i);
        let shifted: Vec<f64> = row
            .iter()
            .zip(center)
            .map(|(z, c)| (z - c) / teacher_temp)
            .collect();
        let max = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = shifted.iter().map(|s| (s - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| e / sum));
    }
    Ok(Tensor::from_vec_unchecked(vec![r, k], out))
}

/// Mean Shannon entropy (nats) of the rows of a probability matrix: the
/// collapse monitor logged during training.
pub fn mean_row_entropy(probs: &Tensor<f64>) -> f64 {
    let r = probs.rows();
    let mut total = 0.0;
    for i in 0..r {
        for &p in probs.row(i) {
            if p > 0.0 {
                total -= p * p.ln();
            }
        }
    }
    total / r as f64
}

/// The (teacher view, student view) index pairs entering the loss:
/// every teacher view against every *other* student view.
fn loss_pairs(num_teacher: usize, num_student: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for t in 0..num_teacher {
        for s in 0..num_student {
            if s != t {
                pairs.push((t, s));
            }
        }
    }
    pairs
}

/// Distillation loss on the tape: mean over view pairs of the
/// cross-entropy between the (fixed) teacher distribution and the
/// student's sharpened softmax. Teacher views are the leading student
/// views by index.
pub fn dino_loss<T: Real>(
    g: &mut Graph<T>,
    student_logits: &[VarId],
    teacher_probs: &[Tensor<f64>],
    cfg: &DinoConfig,
) -> Result<VarId, DinoError> {
    if teacher_probs.is_empty() || student_logits.len() < 2 {
        return Err(DinoError::ShapeMismatch(
            "need at least one teacher view and two student views".into(),
        ));
    }
    if teacher_probs.len() > student_logits.len() {
        return Err(DinoError::ShapeMismatch(format!(
            "{} teacher views exceed {} student views",
            teacher_probs.len(),
            student_logits.len()
        )));
    }
    for (i, &z) in student_logits.iter().enumerate() {
        let shape = g.value(z).shape();
        if shape != [1, cfg.out_dim] {
            return Err(DinoError::ShapeMismatch(format!(
                "student view {i} logits are {shape:?}, expected [1, {}]",
                cfg.out_dim
            )));
        }
    }
    for (i, p) in teacher_probs.iter().enumerate() {
        if p.shape() != [1, cfg.out_dim] {
            return Err(DinoError::ShapeMismatch(format!(
                "teacher view {i} distribution is {:?}, expected [1, {}]",
                p.shape(),
                cfg.out_dim
            )));
        }
    }
    let inv_temp = 1.0 / cfg.student_temp;
    let pairs = loss_pairs(teacher_probs.len(), student_logits.len());
    let mut sum: Option<VarId> = None;
    for &(t, s) in &pairs {
        let target: Tensor<T> = teacher_probs[t].cast();
        let term = g.ce_loss_mean(student_logits[s], target, inv_temp);
        sum = Some(match sum {
            Some(acc) => g.add(acc, term),
            None => term,
        });
    }
    Ok(g.mul_scalar(sum.unwrap(), 1.0 / pairs.len() as f64))
}

/// Student + teacher parameters, the center and the step counter: the
/// whole mutable training state.
#[derive(Debug, Clone)]
pub struct DinoState<T: Real = f32> {
    pub student: ModelParams<T>,
    pub teacher: ModelParams<T>,
    pub center: Vec<f64>,
    pub step: u64,
}

impl<T: Real> DinoState<T> {
    /// Fresh state: teacher starts as an exact copy of the student, the
    /// center at zero. All randomness comes from `seed` via the `"init"`
    /// stream.
    pub fn init(vit_cfg: &ViTConfig, dino_cfg: &DinoConfig, seed_value: u64) -> Result<Self, DinoError> {
        dino_cfg.validate_with(vit_cfg)?;
        let mut rng = seed::rng(seed_value, "init");
        let student = ModelParams::init(vit_cfg, dino_cfg, &mut rng);
        let teacher = student.clone();
        Ok(Self {
            student,
            teacher,
            center: vec![0.0; dino_cfg.out_dim],
            step: 0,
        })
    }

    pub fn validate(&self) -> Result<(), DinoError> {
        if self.student.names() != self.teacher.names() {
            return Err(DinoError::ShapeMismatch(
                "student and teacher parameter names differ".into(),
            ));
        }
        for ((n, s), t) in self
            .student
            .names()
            .iter()
            .zip(self.student.tensors())
            .zip(self.teacher.tensors())
        {
            if s.shape() != t.shape() {
                return Err(DinoError::ShapeMismatch(format!(
                    "{n}: student {:?} vs teacher {:?}",
                    s.shape(),
                    t.shape()
                )));
            }
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(DinoError::InvalidConfig("center is not finite".into()));
        }
        Ok(())
    }
}

/// EMA update `θ_t ← m·θ_t + (1−m)·θ_s`, elementwise over every tensor.
pub fn teacher_ema_update<T: Real>(
    teacher: &mut ModelParams<T>,
    student: &ModelParams<T>,
    momentum: f64,
) {
    assert_eq!(
        teacher.names(),
        student.names(),
        "EMA over mismatched parameter sets"
    );
    let m = T::from_f64(momentum);
    let one_minus = T::from_f64(1.0 - momentum);
    for (t, s) in teacher.tensors_mut().iter_mut().zip(student.tensors()) {
        for (tv, sv) in t.data_mut().iter_mut().zip(s.data()) {
            *tv = m * *tv + one_minus * *sv;
        }
    }
}

/// Center update `c ← m·c + (1−m)·mean(batch logits)`, in 64-bit.
/// `teacher_logits` holds one `[R, K]` matrix per global view; the mean
/// runs over every row of every view.
pub fn center_update(center: &mut [f64], teacher_logits: &[Tensor<f64>], momentum: f64) {
    let total_rows: usize = teacher_logits.iter().map(Tensor::rows).sum();
    assert!(total_rows > 0, "center update over an empty batch");
    let k = center.len();
    let mut mean = vec![0.0f64; k];
    for t in teacher_logits {
        assert_eq!(t.cols(), k, "logit width vs center length");
        for i in 0..t.rows() {
            for (m, z) in mean.iter_mut().zip(t.row(i)) {
                *m += z;
            }
        }
    }
    for m in &mut mean {
        *m /= total_rows as f64;
    }
    for (c, m) in center.iter_mut().zip(mean) {
        *c = momentum * *c + (1.0 - momentum) * m;
    }
}
