use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{ConfigError, RawConfig, RunConfig};

/// Batch experiments on quasi-periodic cocycles and Schrödinger operators.
#[derive(Parser)]
#[command(name = "kamred", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fibered rotation number per energy (CSV: E, rho).
    Rotnum(Common),
    /// KAM reduction of the Schrödinger cocycle per energy (JSON).
    KamReduce(Common),
    /// Rotation number, IDS, Lyapunov exponent and gap labels (CSV).
    IdsScan(Common),
    /// Homogeneity constant of a spectrum indicator (JSON).
    Homogeneity(Common),
    /// Transport velocities of the truncated operator (CSV).
    Transport(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// key=value file, or an earlier output whose echoed config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for energy grids (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config key; repeatable, wins over the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_ENTRY: u8 = 4;
pub const EXIT_NUMERICAL: u8 = 5;
pub const EXIT_IO: u8 = 6;

fn resolve(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut raw = RawConfig::default();
    if let Some(path) = &common.config {
        raw.load(path)?;
    }
    for pair in &common.set {
        raw.set_pair(pair)?;
    }
    if let Some(seed) = common.seed {
        raw.set("seed", &seed.to_string())?;
    }
    RunConfig::resolve(&raw)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Rotnum(c) => ("rotnum", c),
        Command::KamReduce(c) => ("kam-reduce", c),
        Command::IdsScan(c) => ("ids-scan", c),
        Command::Homogeneity(c) => ("homogeneity", c),
        Command::Transport(c) => ("transport", c),
    };
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("kamred {name}: config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("kamred {name}: cannot start workers: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let run = pool.install(|| match &cli.command {
        Command::Rotnum(_) => commands::rotnum(&cfg),
        Command::KamReduce(_) => commands::kam_reduce(&cfg),
        Command::IdsScan(_) => commands::ids_scan(&cfg),
        Command::Homogeneity(_) => commands::homogeneity(&cfg),
        Command::Transport(_) => commands::transport(&cfg),
    });
    if let Some(msg) = &run.message {
        eprintln!("kamred {name}: {msg}");
    }
    let written = match &common.out {
        Some(path) => std::fs::write(path, &run.output),
        None => std::io::stdout().lock().write_all(run.output.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("kamred {name}: cannot write output: {e}");
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::from(run.code)
}
