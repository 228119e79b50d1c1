//! `greenrec`: Green functions, densities, moment tables and spectral
//! classifications from a JSON run config.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::write_atomic;

#[derive(Parser, Debug)]
#[command(name = "greenrec", version, about = "Green functions of discrete Schrödinger operators by backward recursion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Compare against an explicit finite truncation where one exists.
    #[arg(long, global = true)]
    oracle: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// G_λ(0,0) per grid point.
    Green,
    /// (1/π) Im G along the ε ladder.
    Density,
    /// M_p of the sample pool along the ε ladder.
    Moments,
    /// Pool summaries for the percolated tree.
    Percolation,
    /// Per-level circulant spectra of the regular loop tree.
    Looptree,
    /// Spectral classification as JSON.
    Classify,
    /// Recursion against direct elimination on one truncation.
    OracleCompare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Green => "green",
            Command::Density => "density",
            Command::Moments => "moments",
            Command::Percolation => "percolation",
            Command::Looptree => "looptree",
            Command::Classify => "classify",
            Command::OracleCompare => "oracle-compare",
        }
    }

    fn always_stochastic(self) -> bool {
        matches!(self, Command::Moments | Command::Percolation)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("missing flag `--config`".into()))?;
    let cfg = RunConfig::load(path)?;
    if let Some(c) = &cfg.command {
        if c != cli.command.name() {
            return Err(CliError::Config(format!(
                "key `command` is `{c}` but the subcommand is `{}`",
                cli.command.name()
            )));
        }
    }
    let seed = cli.seed.or(cfg.seed);
    if seed.is_none() && (cfg.model.is_stochastic() || cli.command.always_stochastic()) {
        return Err(CliError::Config("missing key `seed` (required for stochastic runs; or pass --seed)".into()));
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("flag `--threads` must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Ctx { cfg: &cfg, seed, oracle: cli.oracle };
    let text = match cli.command {
        Command::Green => commands::green(&ctx)?.render(),
        Command::Density => commands::density(&ctx)?.render(),
        Command::Moments => commands::moments(&ctx)?.render(),
        Command::Percolation => commands::percolation(&ctx)?.render(),
        Command::Looptree => commands::looptree(&ctx)?.render(),
        Command::OracleCompare => commands::oracle_compare(&ctx)?.render(),
        Command::Classify => {
            serde_json::to_string_pretty(&commands::classify(&ctx)?).expect("json values serialize") + "\n"
        }
    };
    match cli.out.or(cfg.out.clone()) {
        Some(p) => write_atomic(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("greenrec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
