//! `eed profile`: layer-wise EED measurement, either live from a checkpoint
//! and probe dataset or offline from a saved activation dump.

use crate::manifest::RunManifest;
use anyhow::Context;
use clap::ValueEnum;
use eed_core::data::{read_dataset, read_dump, write_dump};
use eed_core::dino::read_checkpoint;
use eed_core::profiler::{
    collect_probe_activations, export_csv, export_svg, profile_from_dump, profile_from_probe,
    CovarianceVariant, EEDProfile, ProbeSpec, DEFAULT_PROBE_IMAGES,
};
use std::path::PathBuf;

#[derive(Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Centered,
    Uncentered,
}

impl From<VariantArg> for CovarianceVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Centered => CovarianceVariant::Centered,
            VariantArg::Uncentered => CovarianceVariant::Uncentered,
        }
    }
}

#[derive(clap::Args)]
pub struct ProfileArgs {
    /// Checkpoint whose teacher weights are probed. Exactly one of
    /// --checkpoint (with --data) or --from-dump must be given.
    #[arg(long, required_unless_present = "from_dump", conflicts_with = "from_dump")]
    checkpoint: Option<PathBuf>,
    /// Probe dataset file for the live path.
    #[arg(long, required_unless_present = "from_dump", conflicts_with = "from_dump")]
    data: Option<PathBuf>,
    /// Previously captured activations to analyze instead of a model.
    #[arg(long)]
    from_dump: Option<PathBuf>,
    /// Directory for profile.csv, profile.svg and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Probe subset size (clamped to the dataset size).
    #[arg(long, default_value_t = DEFAULT_PROBE_IMAGES)]
    probe: usize,
    /// Covariance estimator recorded in the profile.
    #[arg(long, value_enum, default_value_t = VariantArg::Centered)]
    variant: VariantArg,
    /// Pool only patch tokens, dropping the CLS row.
    #[arg(long)]
    exclude_cls: bool,
    /// Also save the captured activations for later --from-dump analysis.
    #[arg(long, conflicts_with = "from_dump")]
    dump_out: Option<PathBuf>,
    /// Seed for the probe subset selection (live path only).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn run(args: ProfileArgs, threads: usize) -> anyhow::Result<()> {
    let mut manifest = RunManifest::new("profile", threads);
    manifest.seed = Some(args.seed);
    let variant = CovarianceVariant::from(args.variant);
    manifest.set("variant", variant.as_str());
    manifest.set("exclude_cls", args.exclude_cls);

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("create output directory {}", args.out_dir.display()))?;

    let profile: EEDProfile = match &args.from_dump {
        Some(dump_path) => {
            let dump = read_dump(dump_path)
                .with_context(|| format!("read dump {}", dump_path.display()))?;
            manifest.input(dump_path);
            let tag = dump_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dump".to_string());
            profile_from_dump(&dump, &tag, variant, !args.exclude_cls)?
        }
        None => {
            let ckpt_path = args.checkpoint.as_ref().expect("clap requires --checkpoint");
            let data_path = args.data.as_ref().expect("clap requires --data");
            let ckpt = read_checkpoint(ckpt_path)
                .with_context(|| format!("read checkpoint {}", ckpt_path.display()))?;
            let dataset = read_dataset(data_path)
                .with_context(|| format!("read dataset {}", data_path.display()))?;
            manifest.input(ckpt_path);
            manifest.input(data_path);
            manifest.set("probe", args.probe);
            manifest.set("params", "teacher");
            manifest.set("checkpoint_step", ckpt.state.step);

            // The teacher (the EMA of the student) is the model the method
            // distills into, so it is what gets measured.
            let params = ckpt.state.teacher.backbone_parameter_set(&ckpt.vit, &ckpt.dino)?;
            let spec = ProbeSpec {
                probe_images: args.probe,
                seed: args.seed,
                variant,
                include_cls: !args.exclude_cls,
            };
            let acts = collect_probe_activations(&ckpt.vit, &params, &dataset, &spec)?;
            if let Some(dump_path) = &args.dump_out {
                write_dump(dump_path, ckpt.vit.content_hash(), &acts.layers)
                    .with_context(|| format!("write dump {}", dump_path.display()))?;
                manifest.output(dump_path);
            }
            profile_from_probe(
                &acts,
                ckpt.vit.content_hash(),
                &dataset.source,
                variant,
                spec.include_cls && ckpt.vit.include_cls_token,
            )?
        }
    };

    let csv_path = args.out_dir.join("profile.csv");
    let svg_path = args.out_dir.join("profile.svg");
    export_csv(&profile, &csv_path)
        .with_context(|| format!("write profile {}", csv_path.display()))?;
    export_svg(&profile, &svg_path)
        .with_context(|| format!("write chart {}", svg_path.display()))?;
    manifest.output(&csv_path);
    manifest.output(&svg_path);
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "profiled {} layers over {} token rows; wrote {}",
        profile.num_layers(),
        profile.probe_tokens,
        csv_path.display()
    );
    if let Ok(summary) = profile.bottleneck() {
        println!(
            "bottleneck at layer {}: min EED {:.1}%, endpoints {:.1}%/{:.1}%, u-shape {:.1}pp",
            summary.argmin_layer,
            summary.min_eed_percent,
            summary.first_eed_percent,
            summary.last_eed_percent,
            summary.u_shape_score
        );
    }
    Ok(())
}
