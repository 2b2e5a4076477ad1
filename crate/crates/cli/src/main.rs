//! `parisian`: Parisian stopping-time distributions and prices from a JSON config.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Kind, McOverrides};
use config::RunConfig;
use error::{CliError, CliResult};
use output::Format;

/// Environment override for the worker thread count.
const THREADS_ENV: &str = "PARISIAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "parisian", version, about = "Parisian stopping times via CTMC approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Also write the CSV to this file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Significant digits of floating-point output.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,

    /// Print runtime_ms as 0, making the output byte-reproducible.
    #[arg(long, global = true)]
    no_timing: bool,

    /// Write the base grid as CSV (index,node,step).
    #[arg(long, global = true)]
    dump_grid: Option<PathBuf>,

    /// Write the base generator as triplet CSV (row,col,rate).
    #[arg(long, global = true)]
    dump_generator: Option<PathBuf>,

    /// Worker threads (default: config `threads`, then $PARISIAN_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// P[τ ≤ t] at each configured time.
    Cdf,
    /// Parisian option price.
    Price,
    /// Parisian ruin probability.
    Ruin,
    /// Parisian bond price under a short-rate chain.
    Bond,
    /// MinParisianHit option price.
    Minhit,
    /// Parisian option price under regime switching.
    RsPrice,
    /// Multi-sided Parisian CDF or price.
    Multisided,
    /// Convergence ladder with errors and fitted order.
    Convergence,
    /// Monte Carlo estimate on the chain.
    Mc {
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl Command {
    fn kind(&self) -> (Kind, McOverrides) {
        let k = match self {
            Command::Cdf => Kind::Cdf,
            Command::Price => Kind::Price,
            Command::Ruin => Kind::Ruin,
            Command::Bond => Kind::Bond,
            Command::Minhit => Kind::MinHit,
            Command::RsPrice => Kind::RsPrice,
            Command::Multisided => Kind::MultiSided,
            Command::Convergence => Kind::Convergence,
            Command::Mc { paths, seed } => {
                return (
                    Kind::Mc,
                    McOverrides {
                        paths: *paths,
                        seed: *seed,
                    },
                )
            }
        };
        (k, McOverrides::default())
    }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn threads(cli: &Cli, cfg: &RunConfig) -> CliResult<Option<usize>> {
    if let Some(t) = cli.threads.or(cfg.threads) {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(THREADS_ENV, format!("expected a thread count, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config <FILE> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    if let Some(t) = threads(cli, &cfg)? {
        if t == 0 {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let (kind, mc) = cli.command.kind();
    let table = commands::run(kind, &cfg, mc)?;
    let csv = table.render(Format {
        precision: cli.precision,
        timing: !cli.no_timing,
    });
    print!("{csv}");
    if let Some(p) = &cli.output {
        write(p, &csv)?;
    }
    if cli.dump_grid.is_some() || cli.dump_generator.is_some() {
        let (grid, gen) = commands::chain(kind, &cfg)?;
        if let Some(p) = &cli.dump_grid {
            write(p, &grid.to_csv())?;
        }
        if let Some(p) = &cli.dump_generator {
            write(p, &gen.to_triplet_csv())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
