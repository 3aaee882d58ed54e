//! The training loop: multi-crop batches, distillation loss, AdamW on
//! the student, EMA into the teacher, center updates and per-step
//! metrics.
//!
//! Determinism: all randomness flows from the caller's seed through
//! labeled streams — `"init"` for parameters, `"data"` for epoch
//! shuffling, `"augment/step/<n>"` for each step's crops — so a run is
//! reproducible bit-for-bit regardless of how it is chunked into calls.

use super::{
    center_update, dino_loss, mean_row_entropy, multi_crop, teacher_ema_update,
    teacher_probabilities, view_logits, write_checkpoint, DinoConfig, DinoError, DinoState,
};
use crate::autodiff::{Graph, VarId};
use crate::data::ImageDataset;
use crate::numlin::Tensor;
use crate::optim::{AdamW, AdamWConfig, CosineSchedule};
use crate::seed;
use crate::vit::ViTConfig;
use rand::seq::SliceRandom;
use std::path::PathBuf;

/// Loop knobs beyond the model configs. `epochs` counts passes over the
/// dataset; `max_steps` caps the run regardless of epochs.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub final_lr: f64,
    pub warmup_steps: u64,
    pub weight_decay: f64,
    pub max_steps: Option<u64>,
    /// Collapse-ablation knob: when false the center is frozen at zero.
    pub centering: bool,
    /// Write a checkpoint every n steps (0 = never) into `checkpoint_dir`.
    pub checkpoint_every: u64,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 1,
            batch_size: 4,
            base_lr: 5e-4,
            final_lr: 1e-6,
            warmup_steps: 50,
            weight_decay: 0.04,
            max_steps: None,
            centering: true,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

/// One logged step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub loss: f64,
    pub teacher_entropy: f64,
    pub lr: f64,
}

/// Renders the metrics log as CSV (deterministic formatting).
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("step,loss,teacher_entropy,lr\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.8e},{:.8e},{:.8e}\n",
            r.step, r.loss, r.teacher_entropy, r.lr
        ));
    }
    out
}

/// Final state plus everything needed to continue or analyze the run.
pub struct TrainOutput {
    pub state: DinoState<f32>,
    pub optimizer: AdamW<f32>,
    pub metrics: Vec<MetricsRow>,
}

/// Trains from a fresh initialization.
pub fn train(
    dataset: &ImageDataset,
    vit_cfg: &ViTConfig,
    dino_cfg: &DinoConfig,
    opts: &TrainOptions,
    seed_value: u64,
) -> Result<TrainOutput, DinoError> {
    let state = DinoState::<f32>::init(vit_cfg, dino_cfg, seed_value)?;
    let optimizer = AdamW::new(
        AdamWConfig {
            weight_decay: opts.weight_decay,
            ..AdamWConfig::default()
        },
        &state.student.shapes(),
    );
    train_from(state, optimizer, dataset, vit_cfg, dino_cfg, opts, seed_value)
}

/// Continues training from existing state (the resume path). The step
/// counter keeps counting from where the state left off.
pub fn train_from(
    mut state: DinoState<f32>,
    mut optimizer: AdamW<f32>,
    dataset: &ImageDataset,
    vit_cfg: &ViTConfig,
    dino_cfg: &DinoConfig,
    opts: &TrainOptions,
    seed_value: u64,
) -> Result<TrainOutput, DinoError> {
    dino_cfg.validate_with(vit_cfg)?;
    state.validate()?;
    if dataset.is_empty() {
        return Err(DinoError::EmptyDataset);
    }
    dataset.validate()?;
    if dataset.image_size() != vit_cfg.image_size {
        return Err(DinoError::ShapeMismatch(format!(
            "dataset images are {} px, model expects {}",
            dataset.image_size(),
            vit_cfg.image_size
        )));
    }
    if opts.batch_size == 0 {
        return Err(DinoError::InvalidConfig("batch_size must be positive".into()));
    }

    let n = dataset.len();
    let steps_per_epoch = n.div_ceil(opts.batch_size) as u64;
    let planned = {
        let by_epochs = steps_per_epoch * opts.epochs as u64;
        opts.max_steps.map_or(by_epochs, |m| by_epochs.min(m))
    };
    let schedule = CosineSchedule {
        base_lr: opts.base_lr,
        final_lr: opts.final_lr,
        warmup_steps: opts.warmup_steps,
        total_steps: state.step + planned,
    };
    let local_size = dino_cfg.local_image_size(vit_cfg);
    let mut metrics = Vec::with_capacity(planned as usize);
    let mut data_rng = seed::rng(seed_value, "data");
    let mut done = 0u64;

    'epochs: for _ in 0..opts.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut data_rng);
        for batch in order.chunks(opts.batch_size) {
            if done >= planned {
                break 'epochs;
            }
            let lr = schedule.lr_at(state.step);
            let teacher_temp = dino_cfg.teacher_temp_at(state.step);
            let mut crop_rng = seed::rng(seed_value, &format!("augment/step/{}", state.step));

            // teacher forward for the whole batch on a frozen tape
            let mut tg = Graph::<f32>::new();
            let tmodel = state.teacher.bind(&mut tg, false);
            // student tape for the batch
            let mut g = Graph::<f32>::new();
            let smodel = state.student.bind(&mut g, true);

            let mut batch_teacher_logits: Vec<Tensor<f64>> = Vec::with_capacity(2 * batch.len());
            let mut entropy_sum = 0.0;
            let mut loss_sum: Option<VarId> = None;
            for &idx in batch {
                let views = multi_crop(
                    &dataset.images[idx],
                    &mut crop_rng,
                    dino_cfg,
                    vit_cfg.image_size,
                    local_size,
                );
                let mut teacher_probs = Vec::with_capacity(2);
                for view in &views[..2] {
                    let z = view_logits(&mut tg, vit_cfg, &tmodel, view)?;
                    let logits: Tensor<f64> = tg.value(z).cast();
                    let probs = teacher_probabilities(&logits, &state.center, teacher_temp)?;
                    entropy_sum += mean_row_entropy(&probs);
                    teacher_probs.push(probs);
                    batch_teacher_logits.push(logits);
                }
                let student_logits: Vec<VarId> = views
                    .iter()
                    .map(|view| view_logits(&mut g, vit_cfg, &smodel, view))
                    .collect::<Result<_, _>>()?;
                let image_loss = dino_loss(&mut g, &student_logits, &teacher_probs, dino_cfg)?;
                loss_sum = Some(match loss_sum {
                    Some(acc) => g.add(acc, image_loss),
                    None => image_loss,
                });
            }
            let loss_var = g.mul_scalar(loss_sum.unwrap(), 1.0 / batch.len() as f64);
            let loss = loss_var_value(&g, loss_var);
            if !loss.is_finite() {
                return Err(DinoError::NonFiniteLoss {
                    step: state.step,
                    diagnostic: format!(
                        "lr {lr:.3e}, center max |c| {:.3e}, batch of {}",
                        state.center.iter().fold(0.0f64, |a, c| a.max(c.abs())),
                        batch.len()
                    ),
                });
            }
            g.backward(loss_var)
                .expect("loss is scalar by construction");
            let grads: Vec<Option<Tensor<f32>>> = smodel
                .all_ids
                .iter()
                .map(|&id| g.take_grad(id))
                .collect();
            optimizer.step(state.student.tensors_mut(), &grads, lr);
            teacher_ema_update(&mut state.teacher, &state.student, dino_cfg.teacher_momentum);
            if opts.centering {
                center_update(
                    &mut state.center,
                    &batch_teacher_logits,
                    dino_cfg.center_momentum,
                );
            }
            state.step += 1;
            done += 1;
            metrics.push(MetricsRow {
                step: state.step,
                loss,
                teacher_entropy: entropy_sum / (2 * batch.len()) as f64,
                lr,
            });
            if opts.checkpoint_every > 0 && state.step.is_multiple_of(opts.checkpoint_every) {
                if let Some(dir) = &opts.checkpoint_dir {
                    let path = dir.join(format!("ckpt-{:08}.eedc1", state.step));
                    write_checkpoint(&path, vit_cfg, dino_cfg, &state, Some(&optimizer))?;
                }
            }
        }
    }
    Ok(TrainOutput { state, optimizer, metrics })
}

fn loss_var_value(g: &Graph<f32>, id: VarId) -> f64 {
    g.value(id).data()[0] as f64
}
