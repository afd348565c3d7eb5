use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use tvopt::harness::{check_topology, consensus_bench, parse_libsvm, run_experiment, ExperimentConfig};
use tvopt::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;
const EXIT_PARSE: u8 = 3;

/// Decentralized optimization over time-varying networks.
#[derive(Parser)]
#[command(name = "tvopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method of an experiment config; writes the metrics CSV and manifest.
    Run { config: PathBuf },
    /// Verify the mixing assumptions of the config's schedule and print δ̂.
    CheckTopology { config: PathBuf },
    /// Print the gossip decay curve of a random start as CSV.
    ConsensusBench { config: PathBuf },
    /// Validate a LibSVM file and print a summary.
    Parse { file: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io { .. } => EXIT_PARSE,
        _ => EXIT_CONFIG,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn run(config: PathBuf) -> Result<ExitCode, Error> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let report = run_experiment(&cfg)?;
    let (csv, manifest) = report.write(&cfg)?;
    for f in &report.manifest.failures {
        eprintln!("method failed: {f}");
    }
    for m in &report.manifest.methods {
        if let (Some(comms), Some(fgap)) = (m.total_comms, m.final_fgap) {
            println!("{:<20} comms {:>9}  fgap {:.3e}", m.id, comms, fgap);
        }
    }
    println!("wrote {} and {}", csv.display(), manifest.display());
    if report.all_failed() {
        return Ok(ExitCode::from(EXIT_ALL_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

fn topology(config: PathBuf) -> Result<ExitCode, Error> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let (_, r) = check_topology(&cfg)?;
    let summary = json!({
        "window": r.window,
        "horizon": r.horizon,
        "delta_hat": r.delta_hat,
        "max_residual": r.max_residual,
        "min_entry": r.min_entry,
        "sparsity_violations": r.sparsity_violations.len(),
        "pass": r.pass,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if r.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: schedule violates the mixing assumptions");
        Ok(ExitCode::from(EXIT_CONFIG))
    }
}

fn bench(config: PathBuf) -> Result<ExitCode, Error> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let b = consensus_bench(&cfg)?;
    eprintln!("window {} delta_hat {:.6}", b.window, b.delta_hat);
    print!("{}", b.csv());
    Ok(ExitCode::SUCCESS)
}

fn parse(file: PathBuf) -> Result<ExitCode, Error> {
    let ds = parse_libsvm(&file).map_err(|e| match e {
        Error::Io { .. } | Error::Parse { .. } => e,
        other => Error::Parse {
            path: file.display().to_string(),
            line: 0,
            msg: other.to_string(),
        },
    })?;
    let summary = json!({
        "rows": ds.m(),
        "features": ds.dim,
        "nnz": ds.nnz(),
        "label_set": ds.label_set,
        "positive": ds.labels.iter().filter(|&&l| l == 1.0).count(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config } => run(config),
        Command::CheckTopology { config } => topology(config),
        Command::ConsensusBench { config } => bench(config),
        Command::Parse { file } => parse(file),
    };
    outcome.unwrap_or_else(fail)
}
