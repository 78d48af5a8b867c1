use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ris_radar_harness::{resolve, run, Experiment, Overrides};

#[derive(Parser)]
#[command(name = "ris-radar", version, about = "RIS-assisted radar sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise and generalized coherences against the target spacing.
    CoherenceSweep(Common),
    /// Expected detection and ROC-area bounds per target and signal.
    DetectionBound(Common),
    /// Position, delay and angle error bounds over random gain draws.
    FisherCdf(Common),
    /// Monte Carlo runs of the full estimation pipeline.
    Sense(Common),
    /// OMP objective surfaces of the first two iterations.
    WorkingPrinciple(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated spacings in radians, e.g. 0.02,0.06,0.1
    #[arg(long, value_delimiter = ',')]
    delta_list: Option<Vec<f64>>,
    /// Synthesize noiseless observations.
    #[arg(long)]
    no_noise: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, c) = match cli.command {
        Command::CoherenceSweep(c) => (Experiment::CoherenceSweep, c),
        Command::DetectionBound(c) => (Experiment::DetectionBound, c),
        Command::FisherCdf(c) => (Experiment::FisherCdf, c),
        Command::Sense(c) => (Experiment::Sense, c),
        Command::WorkingPrinciple(c) => (Experiment::WorkingPrinciple, c),
    };
    let overrides = Overrides {
        config: c.config,
        seed: c.seed,
        trials: c.trials,
        deltas: c.delta_list,
        no_noise: c.no_noise,
    };
    let result = resolve(&overrides).and_then(|cfg| run(kind, &cfg, &c.out));
    match result {
        Ok(m) => {
            for name in m.outputs.keys() {
                println!("{}", c.out.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
