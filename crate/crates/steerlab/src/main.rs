//! Command-line driver for the experiment pipeline.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 stage failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use steerlab::error::Error;
use steerlab::pipeline::{manifest::RunManifest, stages, toydata, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "steerlab",
    version,
    about = "Extract and ablate refusal directions, administer surveys and benchmarks, and run the statistical analyses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every pipeline stage in order, resuming completed stages.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Capture activations, compute difference-in-means candidates, and
    /// select the refusal direction.
    ExtractDirection {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the selected direction by attack success rate on held-out
    /// harmful prompts.
    ValidateDirection {
        #[arg(long)]
        config: PathBuf,
    },
    /// Administer surveys and benchmarks under the configured conditions.
    Administer {
        #[arg(long)]
        config: PathBuf,
    },
    /// Extract concept directions from the base/instruct pair and compute
    /// shift reports.
    Geometry {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the regression battery over persisted responses.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit figures and the run summary from persisted artifacts.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a self-contained toy dataset bundle plus a ready-to-run
    /// config.
    GenToyData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn load(config: &PathBuf) -> Result<(ExperimentConfig, String), Error> {
    let (cfg, hash) = ExperimentConfig::load(config)?;
    cfg.validate()?;
    Ok((cfg, hash))
}

fn print_manifest(manifest: &RunManifest) {
    println!(
        "config {}",
        &manifest.config_hash[..12.min(manifest.config_hash.len())]
    );
    for (stage, state) in &manifest.stages {
        println!(
            "  {stage:<10} {} ({} artifacts)",
            if state.complete { "complete" } else { "pending" },
            state.artifacts.len()
        );
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config } => {
            let (cfg, hash) = load(&config)?;
            let manifest = stages::run_pipeline(&cfg, &hash)?;
            print_manifest(&manifest);
        }
        Command::ExtractDirection { config } => run_single(&config, "extract")?,
        Command::ValidateDirection { config } => run_single(&config, "validate")?,
        Command::Administer { config } => run_single(&config, "administer")?,
        Command::Geometry { config } => run_single(&config, "geometry")?,
        Command::Analyze { config } => run_single(&config, "analyze")?,
        Command::Report { config } => run_single(&config, "report")?,
        Command::GenToyData { out, seed } => {
            let config_path = toydata::generate(&out, seed)?;
            println!("wrote toy bundle; config at {}", config_path.display());
        }
    }
    Ok(())
}

fn run_single(config: &PathBuf, stage: &str) -> Result<(), Error> {
    let (cfg, hash) = load(config)?;
    let manifest = stages::run_stage(&cfg, &hash, stage)?;
    print_manifest(&manifest);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config(_) | Error::ModelLoad(_, _))) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e @ Error::StageFailure { .. }) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
