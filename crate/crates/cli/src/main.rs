//! `acma`: runs one configured experiment and writes its artifacts.
//!
//! Exit codes: 0 all checks pass, 1 output could not be written, 2 bad
//! config, 3 solver failure, 4 a verification check failed.

mod commands;
mod config;
mod expr;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser, Debug)]
#[command(name = "acma", version, about = "Complex Monge-Ampere solvers on almost complex domains")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, env = "ACMA_CONFIG")]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long, env = "ACMA_OUT")]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config).
    #[arg(long, env = "ACMA_SEED")]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "ACMA_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Config(String),
    Solver(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Verification(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(m) => write!(f, "i/o error: {m}"),
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Solver(m) => write!(f, "solver failure: {m}"),
            Self::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = config::RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    acma::par::set_threads(cli.threads).map_err(Failure::Config)?;
    let out = commands::output_dir(cli.out, &cfg);
    commands::run(&cfg, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acma: {e}");
            ExitCode::from(e.code())
        }
    }
}
