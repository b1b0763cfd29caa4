use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use multicrystal::io::{execute, Command, OutputFormat, Overrides};

#[derive(Parser)]
#[command(
    name = "multicrystal",
    version,
    about = "Multi-source path-identity interferometer toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Seed for Poissonian counting.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Pair rate and state of the configured interferometer.
    Rate(Common),
    /// 1D or 2D phase sweep.
    Scan(Common),
    /// Visibility/distinguishability of a two-block grouping.
    Duality(Common),
    /// Rate with some sources removed.
    Block(Common),
    /// Two-perspective black-box attribution analysis.
    Gedanken(Common),
    /// Visibility loss from misalignment and yield imbalance.
    Imperfect(Common),
    /// Infer the outer-pair visibility from the two neighbour visibilities.
    EstimateV13(Common),
    /// Path-length-difference coherence conditions.
    Opld(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Sub::Rate(c) => (Command::Rate, c),
        Sub::Scan(c) => (Command::Scan, c),
        Sub::Duality(c) => (Command::Duality, c),
        Sub::Block(c) => (Command::Block, c),
        Sub::Gedanken(c) => (Command::Gedanken, c),
        Sub::Imperfect(c) => (Command::Imperfect, c),
        Sub::EstimateV13(c) => (Command::EstimateV13, c),
        Sub::Opld(c) => (Command::Opld, c),
    };
    let overrides = Overrides {
        out: common.out,
        format: common.format,
        seed: common.seed,
    };
    match execute(command, &common.config, &overrides) {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
