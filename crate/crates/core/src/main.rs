use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use soen_core::cli::{load_config, run_scenario, Command, OutputFormat, ScenarioConfig, ScenarioError};

/// Scaling analysis and event-driven simulation of optoelectronic spiking networks.
#[derive(Debug, Parser)]
#[command(name = "soen", version)]
struct Args {
    /// Command to run; overrides `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn run(args: Args) -> Result<(), ScenarioError> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => {
            let mut c = ScenarioConfig::default();
            c.normalize();
            c
        }
    };
    if let Some(c) = args.command {
        cfg.command = Some(c);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let command = cfg.command.ok_or_else(|| ScenarioError::Invalid {
        key: "command".into(),
        reason: "no command given on the command line or in the config".into(),
    })?;
    let format = args.format.unwrap_or(match command {
        Command::Fig2a | Command::Fig2b => OutputFormat::Csv,
        _ => OutputFormat::Json,
    });
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    for p in run_scenario(&cfg, &out, format)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
