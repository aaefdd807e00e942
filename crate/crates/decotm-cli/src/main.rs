//! Command-line front end: deterministic rate sweeps and a verification
//! suite for the transfer-matrix relaxation model. Exit codes: 0 success,
//! 2 config/CLI error, 3 verification failure, 4 numerical invariant breach.

mod config;
mod error;
mod sweep;
mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::RawConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "decotm",
    version,
    about = "qubit relaxation under piecewise-constant random fields"
)]
struct Cli {
    /// experiment config (strict `key = value` sections; defaults if absent)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// override the configured output path
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// override the configured RNG seed
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// worker threads, 0 = one per core (fallback: DECOTM_THREADS)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// also write a gnuplot script next to the CSV
    #[arg(long, global = true)]
    gnuplot: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// sweep uncorrelated relaxation rates over the noise-to-field ratio
    Fig12,
    /// sweep correlated-noise asymptotic rates over the mixing parameter
    Fig3,
    /// scan the damping transition and bisect its boundary
    Transition,
    /// cross-check the implementation routes and write a report
    Verify,
}

fn init_threads(requested: Option<usize>) -> Result<(), CliError> {
    let n = match requested {
        Some(n) => n,
        None => match std::env::var("DECOTM_THREADS") {
            Ok(v) => v
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("DECOTM_THREADS is not a count: `{v}`")))?,
            Err(_) => 0,
        },
    };
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    init_threads(cli.threads)?;
    let raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::empty(),
    };
    match cli.cmd {
        Cmd::Fig12 => {
            let mut cfg = config::fig12_config(&raw)?;
            if let Some(out) = &cli.out {
                cfg.out = out.clone();
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            sweep::run_fig12(&cfg, cli.gnuplot)
        }
        Cmd::Fig3 => {
            let mut cfg = config::fig3_config(&raw)?;
            if let Some(out) = &cli.out {
                cfg.out = out.clone();
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            sweep::run_fig3(&cfg, cli.gnuplot)
        }
        Cmd::Transition => {
            let mut cfg = config::transition_config(&raw)?;
            if let Some(out) = &cli.out {
                cfg.out = out.clone();
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            sweep::run_transition(&cfg, cli.gnuplot)
        }
        Cmd::Verify => {
            let mut cfg = config::verify_config(&raw)?;
            if let Some(out) = &cli.out {
                cfg.out = out.clone();
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            verify::run_verify(&cfg)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
