//! `eed compare`: rank profile CSVs by interior minimum EED.

use crate::manifest::{sibling_manifest_path, RunManifest};
use anyhow::{bail, Context};
use eed_core::data::atomic_write;
use eed_core::profiler::{compare_eed_sequences, parse_profile_csv, render_comparison};
use std::path::{Path, PathBuf};

#[derive(clap::Args)]
pub struct CompareArgs {
    /// Profile CSVs to rank (at least two, all over the same layer count).
    #[arg(required = true, num_args = 2..)]
    profiles: Vec<PathBuf>,
    /// Report destination; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// File stems label the report rows; full paths break ties when two files
/// share a stem (such as `a/profile.csv` and `b/profile.csv`).
fn labels_for(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = paths
        .iter()
        .map(|p| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        })
        .collect();
    let unique = stems
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if unique == stems.len() {
        stems
    } else {
        paths.iter().map(|p| p.display().to_string()).collect()
    }
}

pub fn run(args: CompareArgs, threads: usize) -> anyhow::Result<()> {
    let mut manifest = RunManifest::new("compare", threads);
    let labels = labels_for(&args.profiles);

    let mut entries = Vec::new();
    let mut variants: Vec<(&Path, Option<String>)> = Vec::new();
    for (path, label) in args.profiles.iter().zip(labels) {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("read profile {}", path.display()))?;
        let parsed =
            parse_profile_csv(&text).with_context(|| format!("parse {}", path.display()))?;
        manifest.input(path);
        variants.push((path, parsed.metadata.get("variant").cloned()));
        entries.push((label, parsed.eed_percents()));
    }

    // Mixed covariance variants would rank apples against oranges.
    if let Some((first_path, Some(first_variant))) = variants.first() {
        for (path, variant) in &variants[1..] {
            if let Some(v) = variant {
                if v != first_variant {
                    bail!(
                        "covariance variant mismatch: {} is {first_variant}, {} is {v}",
                        first_path.display(),
                        path.display(),
                    );
                }
            }
        }
    }

    // Same check the core runs, surfaced here with the file paths.
    let first_layers = entries[0].1.len();
    for ((path, _), (_, eed)) in variants.iter().zip(&entries).skip(1) {
        if eed.len() != first_layers {
            bail!(
                "layer count mismatch: {} has {} layers, {} has {}",
                args.profiles[0].display(),
                first_layers,
                path.display(),
                eed.len()
            );
        }
    }

    let rows = compare_eed_sequences(&entries)?;
    let report = render_comparison(&rows);
    print!("{report}");

    if let Some(out) = &args.out {
        atomic_write(out, report.as_bytes())
            .with_context(|| format!("write report {}", out.display()))?;
        manifest.output(out);
        manifest.write(&sibling_manifest_path(out))?;
    }
    Ok(())
}
