//! `spmopt`: decide which program variables belong in scratchpad memory,
//! then validate the decision with a trace-driven hierarchy simulation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spmopt_core::ErrorCategory;

#[derive(Parser)]
#[command(
    name = "spmopt",
    version,
    about = "Energy-driven data placement across caches and scratchpad memories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify each variable's accesses as cache-friendly or not
    Classify(ClassifyArgs),
    /// Solve the energy-minimizing placement and write a plan document
    Allocate(AllocateArgs),
    /// Simulate a plan; write statistics and energy report documents
    Simulate(SimulateArgs),
    /// Evaluate configurations across problem sizes into a normalized CSV
    Sweep(SweepArgs),
    /// Pretty-print or convert an energy report document
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct ClassifyArgs {
    /// Memory pool document (JSON)
    #[arg(long)]
    pool: PathBuf,
    /// Workload document (JSON)
    #[arg(long)]
    workload: PathBuf,
    /// Integer parameter binding NAME=VALUE (repeatable)
    #[arg(long = "bind")]
    bindings: Vec<String>,
}

#[derive(clap::Args)]
struct AllocateArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    workload: PathBuf,
    #[arg(long = "bind")]
    bindings: Vec<String>,
    /// Output directory for plan.json
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    pool: PathBuf,
    #[arg(long)]
    workload: PathBuf,
    /// Plan document produced by `allocate`
    #[arg(long)]
    plan: PathBuf,
    #[arg(long = "bind")]
    bindings: Vec<String>,
    /// Output directory for stats.json and energy.json
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write the generated access trace as trace.txt
    #[arg(long)]
    dump_trace: bool,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    workload: PathBuf,
    /// Configuration NAME=POOL_PATH (repeatable)
    #[arg(long = "config", required = true)]
    configs: Vec<String>,
    /// Comma-separated problem sizes, e.g. 16,32,64
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<i64>,
    /// Name of the parameter the sizes bind
    #[arg(long, default_value = "N")]
    size_param: String,
    /// Extra parameter binding NAME=VALUE (repeatable)
    #[arg(long = "bind")]
    bindings: Vec<String>,
    /// Baseline configuration for the normalized columns
    /// (defaults to cache_256kB when present)
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Additionally write a long-format table for plotting
    #[arg(long)]
    long: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Doc,
    Csv,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Energy report document (energy.json)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "doc")]
    format: ReportFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(args) => commands::classify(args),
        Command::Allocate(args) => commands::allocate(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err.category() {
                ErrorCategory::Config => ExitCode::from(2),
                ErrorCategory::Solver => ExitCode::from(3),
                ErrorCategory::Simulation => ExitCode::from(4),
            }
        }
    }
}
