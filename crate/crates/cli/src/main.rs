use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use femtoflow_cli::{
    capacity_report, simulate_report, solve_report, sweep_csv, CliError, Config, Overrides,
};

#[derive(Parser)]
#[command(
    name = "femtoflow",
    version,
    about = "Two-tier femtocell network blocking, capacity and energy analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the blocking fixed point at one operating point.
    Solve(Common),
    /// Evaluate the pipeline along the axis in the config's `sweep` section (CSV).
    Sweep(Common),
    /// Compare analytic results with Monte-Carlo estimates.
    Simulate(Common),
    /// Occupancy, capacity and energy efficiency at one operating point.
    Capacity(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; reference parameters when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "mc-samples")]
    mc_samples: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
}

type Report = fn(&Config) -> Result<String, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, f): (&Common, Report) = match &cli.command {
        Command::Solve(c) => (c, solve_report),
        Command::Sweep(c) => (c, sweep_csv),
        Command::Simulate(c) => (c, simulate_report),
        Command::Capacity(c) => (c, capacity_report),
    };
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.apply(Overrides {
        seed: common.seed,
        mc_samples: common.mc_samples,
        replications: common.replications,
    });
    let text = f(&cfg)?;
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("femtoflow: {e}");
            e.exit_code()
        }
    }
}
