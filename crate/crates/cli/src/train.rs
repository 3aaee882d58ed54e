//! `eed train`: run self-distillation and leave a checkpoint, a metrics CSV
//! and a manifest in the output directory.

use crate::manifest::RunManifest;
use anyhow::Context;
use eed_core::config;
use eed_core::data::{atomic_write, read_dataset};
use eed_core::dino::{
    configs_from_kv, configs_to_kv, metrics_csv, read_checkpoint, train, train_from,
    write_checkpoint, TrainOptions,
};
use eed_core::optim::AdamWConfig;
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct TrainArgs {
    /// Model and distillation config as key=value lines. Exactly one of
    /// --config or --resume must be given.
    #[arg(long, required_unless_present = "resume", conflicts_with = "resume")]
    config: Option<PathBuf>,
    /// Checkpoint to continue from; configs and optimizer state come from
    /// the checkpoint and the step counter keeps counting.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Training dataset file.
    #[arg(long)]
    data: PathBuf,
    /// Directory for checkpoint.eedc1, metrics.csv and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Passes over the dataset (may be cut short by --max-steps).
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    /// Root seed for init, batch order and crop sampling.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    #[arg(long, default_value_t = 5e-4)]
    base_lr: f64,
    #[arg(long, default_value_t = 1e-6)]
    final_lr: f64,
    #[arg(long, default_value_t = 50)]
    warmup_steps: u64,
    #[arg(long, default_value_t = 0.04)]
    weight_decay: f64,
    /// Hard cap on optimizer steps for this invocation.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Disable teacher centering (the collapse ablation).
    #[arg(long)]
    no_centering: bool,
    /// Also write ckpt-NNNNNNNN.eedc1 into the output directory every N
    /// steps (0 disables periodic checkpoints).
    #[arg(long, default_value_t = 0)]
    checkpoint_every: u64,
}

pub fn run(args: TrainArgs, threads: usize) -> anyhow::Result<()> {
    let dataset =
        read_dataset(&args.data).with_context(|| format!("read dataset {}", args.data.display()))?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("create output directory {}", args.out_dir.display()))?;

    let opts = TrainOptions {
        epochs: args.epochs,
        batch_size: args.batch_size,
        base_lr: args.base_lr,
        final_lr: args.final_lr,
        warmup_steps: args.warmup_steps,
        weight_decay: args.weight_decay,
        max_steps: args.max_steps,
        centering: !args.no_centering,
        checkpoint_every: args.checkpoint_every,
        checkpoint_dir: (args.checkpoint_every > 0).then(|| args.out_dir.clone()),
    };

    let mut manifest = RunManifest::new("train", threads);
    manifest.seed = Some(args.seed);
    manifest.input(&args.data);
    manifest.set("epochs", args.epochs);
    manifest.set("batch_size", args.batch_size);
    manifest.set("base_lr", args.base_lr);
    manifest.set("final_lr", args.final_lr);
    manifest.set("warmup_steps", args.warmup_steps);
    manifest.set("weight_decay", args.weight_decay);
    manifest.set("centering", !args.no_centering);
    manifest.set("checkpoint_every", args.checkpoint_every);
    if let Some(m) = args.max_steps {
        manifest.set("max_steps", m);
    }

    let (vit_cfg, dino_cfg, output) = match (&args.config, &args.resume) {
        (Some(config_path), None) => {
            let text = std::fs::read_to_string(config_path)
                .with_context(|| format!("read config {}", config_path.display()))?;
            let kv = config::parse_kv(&text)
                .with_context(|| format!("parse config {}", config_path.display()))?;
            let (vit_cfg, dino_cfg) = configs_from_kv(&kv).context("resolve configs")?;
            manifest.input(config_path);
            let out = train(&dataset, &vit_cfg, &dino_cfg, &opts, args.seed)?;
            (vit_cfg, dino_cfg, out)
        }
        (None, Some(resume_path)) => {
            let ckpt = read_checkpoint(resume_path)
                .with_context(|| format!("read checkpoint {}", resume_path.display()))?;
            manifest.input(resume_path);
            manifest.set("resumed_from_step", ckpt.state.step);
            let optimizer = ckpt.optimizer_with(AdamWConfig {
                weight_decay: args.weight_decay,
                ..AdamWConfig::default()
            });
            let out = train_from(
                ckpt.state,
                optimizer,
                &dataset,
                &ckpt.vit,
                &ckpt.dino,
                &opts,
                args.seed,
            )?;
            (ckpt.vit, ckpt.dino, out)
        }
        _ => unreachable!("clap enforces exactly one of --config/--resume"),
    };
    manifest.set_all(&configs_to_kv(&vit_cfg, &dino_cfg));

    let ckpt_path = args.out_dir.join("checkpoint.eedc1");
    write_checkpoint(
        &ckpt_path,
        &vit_cfg,
        &dino_cfg,
        &output.state,
        Some(&output.optimizer),
    )
    .with_context(|| format!("write checkpoint {}", ckpt_path.display()))?;
    manifest.output(&ckpt_path);

    let metrics_path = args.out_dir.join("metrics.csv");
    atomic_write(&metrics_path, metrics_csv(&output.metrics).as_bytes())
        .with_context(|| format!("write metrics {}", metrics_path.display()))?;
    manifest.output(&metrics_path);

    manifest.write(&args.out_dir.join("manifest.json"))?;

    match output.metrics.last() {
        Some(last) => println!(
            "trained {} steps (now at step {}); final loss {:.4}, teacher entropy {:.4}",
            output.metrics.len(),
            output.state.step,
            last.loss,
            last.teacher_entropy
        ),
        None => println!(
            "no steps run; wrote initial checkpoint at step {}",
            output.state.step
        ),
    }
    println!("wrote {}", ckpt_path.display());
    Ok(())
}
