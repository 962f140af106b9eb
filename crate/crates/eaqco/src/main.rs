use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eaqco::config::{ConfigError, ScenarioConfig};
use eaqco::experiment::{self, ExperimentError, SweepParam};

#[derive(Parser)]
#[command(name = "eaqco", version, about = "Energy-aware Q-routing with in-network compute, simulated")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    Eta,
    Epsilon,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a scenario and write traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "EAQCO_OUT")]
        out: PathBuf,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<u32>,
        /// Override the base seed; trial i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Repeat a scenario for several values of one learning parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: Param,
        /// Comma-separated values, e.g. 0.1,0.5,1.0
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, env = "EAQCO_OUT")]
        out: PathBuf,
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(ConfigError),
    Runtime(ExperimentError),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => Failure::Config(c),
            other => Failure::Runtime(other),
        }
    }
}

fn load(path: &Path, trials: Option<u32>, seed: Option<u64>) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(t) = trials {
        cfg.trials = t;
        cfg.seeds = None;
    }
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.seeds = None;
    }
    cfg.to_scenario()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, trials, seed, parallel } => {
            let cfg = load(&config, trials, seed)?;
            let report = experiment::run_experiment(&cfg, &out, parallel)?;
            let a = &report.aggregate;
            println!(
                "{} trials  processing_time {:.6} s (std {:.6})  e_total {:.0} bytes (std {:.0})  -> {}",
                report.traces.len(),
                a.processing_time.mean,
                a.processing_time.std,
                a.e_total_bytes.mean,
                a.e_total_bytes.std,
                out.display()
            );
        }
        Command::Sweep { config, param, values, out, parallel } => {
            let cfg = load(&config, None, None)?;
            let param = match param {
                Param::Eta => SweepParam::Eta,
                Param::Epsilon => SweepParam::Epsilon,
            };
            let report = experiment::sweep(&cfg, param, &values, &out, parallel)?;
            for (v, r) in report.values.iter().zip(&report.runs) {
                println!(
                    "{}={v}  processing_time {:.6} s  e_total {:.0} bytes",
                    param.name(),
                    r.aggregate.processing_time.mean,
                    r.aggregate.e_total_bytes.mean
                );
            }
            println!("comparison -> {}", out.join("comparison.csv").display());
        }
        Command::Validate { config } => {
            let cfg = load(&config, None, None)?;
            println!("{}", cfg.to_json_pretty());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
