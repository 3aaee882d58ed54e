//! `eed synth`: deterministic synthetic corpora on disk.

use crate::manifest::{sibling_manifest_path, RunManifest};
use anyhow::{bail, Context};
use clap::ValueEnum;
use eed_core::data::{gen_object_dataset, gen_texture_dataset, write_dataset};
use std::path::PathBuf;

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    /// Sinusoid mixtures in class-specific frequency bands.
    Texture,
    /// A single shape (disc, triangle or cross) over high-frequency clutter.
    Object,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::Texture => "texture",
            Kind::Object => "object",
        }
    }
}

#[derive(clap::Args)]
pub struct SynthArgs {
    /// Which corpus family to generate.
    #[arg(long, value_enum)]
    kind: Kind,
    /// Root seed; the generator derives its stream from it.
    #[arg(long)]
    seed: u64,
    /// Number of images.
    #[arg(long)]
    n: usize,
    /// Square image side in pixels.
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Destination dataset file (conventionally `.eeds1`).
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: SynthArgs, threads: usize) -> anyhow::Result<()> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    if args.size < 8 {
        bail!("--size must be at least 8 pixels, got {}", args.size);
    }

    let mut manifest = RunManifest::new("synth", threads);
    manifest.seed = Some(args.seed);
    manifest.set("kind", args.kind.as_str());
    manifest.set("n", args.n);
    manifest.set("size", args.size);

    let dataset = match args.kind {
        Kind::Texture => gen_texture_dataset(args.seed, args.n, args.size),
        Kind::Object => gen_object_dataset(args.seed, args.n, args.size),
    };
    write_dataset(&args.out, &dataset)
        .with_context(|| format!("write dataset {}", args.out.display()))?;
    manifest.set("source", &dataset.source);
    manifest.output(&args.out);
    manifest.write(&sibling_manifest_path(&args.out))?;

    println!(
        "wrote {} {} images ({}px) to {}",
        dataset.len(),
        args.kind.as_str(),
        args.size,
        args.out.display()
    );
    Ok(())
}
