//! Degrees-of-freedom, SBP, Fresnel and resolution analyses of 1D imaging
//! arrays, driven by a TOML experiment file.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::Report;
use crate::config::{ArchChoice, ExperimentConfig};

#[derive(Parser)]
#[command(name = "aperture-dof", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Singular values, normalized sums and knee of the forward operator.
    Svd(Args),
    /// SBP as a function of one geometry parameter.
    SbpSweep(Args),
    /// Monostatic and multistatic spatial-frequency coverage along the scene.
    Kspace(Args),
    /// Fresnel DoF counts and the effective monostatic aperture.
    Fresnel(Args),
    /// Point-spread functions and 3 dB beamwidths.
    Resolution(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Architectures to analyze; overrides `array.architecture`.
    #[arg(long, value_enum)]
    arch: Option<ArchArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Mono,
    Multi,
    Both,
}

impl From<ArchArg> for ArchChoice {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Mono => ArchChoice::Mono,
            ArchArg::Multi => ArchChoice::Multi,
            ArchArg::Both => ArchChoice::Both,
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("APERTURE_DOF_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("APERTURE_DOF_THREADS: expected a thread count, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Report> {
    configure_threads()?;
    let (args, name) = match &cli.command {
        Command::Svd(a) => (a, "svd"),
        Command::SbpSweep(a) => (a, "sbp-sweep"),
        Command::Kspace(a) => (a, "kspace"),
        Command::Fresnel(a) => (a, "fresnel"),
        Command::Resolution(a) => (a, "resolution"),
    };
    let config = ExperimentConfig::load(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.run.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let archs = args
        .arch
        .map(ArchChoice::from)
        .unwrap_or(config.array.architecture)
        .architectures();
    let report = match cli.command {
        Command::Svd(_) => commands::svd_cmd(&config, &archs, &out),
        Command::SbpSweep(_) => commands::sbp_sweep_cmd(&config, &out),
        Command::Kspace(_) => commands::kspace_cmd(&config, &out),
        Command::Fresnel(_) => commands::fresnel_cmd(&config, &out),
        Command::Resolution(_) => commands::resolution_cmd(&config, &archs, &out),
    }
    .with_context(|| format!("{name} failed"))?;
    Ok(report)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("check failed: {f}");
                }
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
