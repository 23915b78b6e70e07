mod benchmark;
mod cache;
mod compare;
mod settings;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

/// Full-reference point cloud quality assessment with PCA-based local descriptors.
///
/// Every flag can also be set through an environment variable named
/// POINTPCA_<FLAG>, e.g. POINTPCA_K=9.
#[derive(Debug, Parser)]
#[command(name = "pointpca", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a distorted cloud against its reference
    Compare(compare::CompareArgs),
    /// Correlate scores with subjective ratings listed in a manifest
    Benchmark(benchmark::BenchmarkArgs),
    /// Learn predictor weights from a manifest with leave-p-out splits
    FitWeights(benchmark::FitWeightsArgs),
}

pub(crate) fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compare(args) => compare::run(args),
        Command::Benchmark(args) => benchmark::run_benchmark(args),
        Command::FitWeights(args) => benchmark::run_fit_weights(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
