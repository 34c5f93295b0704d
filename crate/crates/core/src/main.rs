use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entire_fronts::config::{parse_config, parse_schedule, Overrides, Stage};
use entire_fronts::pipeline::{run_command, Command, RunManifest};
use entire_fronts::{Error, Result};

#[derive(Parser)]
#[command(name = "entire-fronts", version, about = "Traveling fronts and entire solutions of monostable systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    dx: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Comma-separated start times, e.g. `2,4,6,8`.
    #[arg(long, global = true)]
    schedule: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Critical speed and the M(lambda) table.
    Spectral,
    /// Spatially independent solution.
    Sis,
    /// Traveling fronts.
    Front,
    /// Entire solution by the approximation scheme.
    Entire,
    /// Numerical checks of the structural assumptions.
    VerifyAssumptions,
    /// All stages with a run manifest.
    Pipeline,
}

fn run(cli: &Cli) -> Result<RunManifest> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    let (command, stage) = match cli.cmd {
        Cmd::Spectral => (Command::Spectral, Stage::Spectral),
        Cmd::Sis => (Command::Sis, Stage::Sis),
        Cmd::Front => (Command::Front, Stage::Front),
        Cmd::Entire => (Command::Entire, Stage::Entire),
        Cmd::VerifyAssumptions => (Command::VerifyAssumptions, Stage::Assumptions),
        Cmd::Pipeline => (Command::Pipeline, Stage::Pipeline),
    };
    let overrides = Overrides {
        dx: cli.dx,
        dt: cli.dt,
        tol: cli.tol,
        schedule: cli.schedule.as_deref().map(parse_schedule).transpose()?,
        seed: cli.seed,
        out: cli.out.clone(),
    };
    overrides.apply(&mut cfg, stage)?;
    run_command(command, cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            for s in &m.stages {
                println!("{:<20} {:>14} {:>8.2}s  {}", s.name, format!("{:?}", s.verdict), s.seconds, s.detail);
            }
            println!("exit {}", m.exit_code);
            ExitCode::from(m.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
