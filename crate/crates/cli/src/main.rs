//! `eed`: generate synthetic corpora, train DINO students, profile
//! layer-wise effective encoding dimension, and compare profiles.
//!
//! Conventions shared by every subcommand:
//!
//! * All randomness flows from that command's single `--seed`; the core
//!   library splits it into independent streams by purpose label (`init`,
//!   `data`, `augment/step/N`, `probe`), so identical inputs and seeds
//!   reproduce identical output bytes.
//! * Each run writes exactly one JSON manifest next to its outputs with the
//!   resolved configuration, seeds, paths and wall-clock duration. Manifests
//!   are the only outputs excluded from byte-for-byte reproducibility.
//! * Outputs are written to a temp file and renamed, so a failing run never
//!   leaves a partial artifact behind.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod compare;
mod manifest;
mod profile;
mod synth;
mod train;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "eed", version, about = "DINO training and EED profiling toolkit")]
struct Cli {
    /// Cap on worker parallelism. The pipeline currently computes on a
    /// single thread; the value is validated and recorded in manifests.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic texture- or object-centric dataset file.
    Synth(synth::SynthArgs),
    /// Train a student/teacher pair with multi-crop self-distillation.
    Train(train::TrainArgs),
    /// Measure the per-layer EED profile of a checkpoint or dump.
    Profile(profile::ProfileArgs),
    /// Rank profile CSVs by their interior minimum EED.
    Compare(compare::CompareArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads as usize;
    let result = match cli.command {
        Command::Synth(args) => synth::run(args, threads),
        Command::Train(args) => train::run(args, threads),
        Command::Profile(args) => profile::run(args, threads),
        Command::Compare(args) => compare::run(args, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
