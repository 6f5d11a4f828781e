use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use marrm_cli::{commands, ingest_prices, RunConfig};

#[derive(Parser)]
#[command(name = "marrm", version, about = "Capital requirements for lognormal losses hedged in a Black-Scholes market")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Capitals over the `levels` grid
    Sweep,
    /// Capitals over `sensitivity.grid` for one market or loss parameter
    Sensitivity,
    /// Finite-space experiments and solver properties; exits 1 on failure
    Properties {
        /// Evaluate the log-shortfall counterexample without stabilization
        #[arg(long)]
        mutate_naive_es_log: bool,
    },
    /// GARCH calibration and rolling one-day-ahead capitals on a price file
    Empirical {
        /// Price CSV (overrides `empirical.prices`)
        #[arg(long)]
        prices: Option<PathBuf>,
    },
    /// Synthetic price CSV from the `garch.*` parameters
    Simulate,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(RunConfig::default()),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Sweep => write_out(out, &commands::sweep(&cfg, cli.verbose)?)?,
        Command::Sensitivity => write_out(out, &commands::sensitivity(&cfg, cli.verbose)?)?,
        Command::Properties { mutate_naive_es_log } => {
            cfg.naive_es_log |= mutate_naive_es_log;
            let (report, ok) = commands::properties(&cfg, cli.verbose)?;
            write_out(out, &report)?;
            return Ok(ok);
        }
        Command::Empirical { prices } => {
            if prices.is_some() {
                cfg.prices = prices;
            }
            let path = cfg
                .prices
                .clone()
                .context("no price file: pass --prices or set empirical.prices")?;
            let series = ingest_prices(&path)?;
            write_out(out, &commands::empirical(&cfg, &series, cli.verbose)?)?;
        }
        Command::Simulate => write_out(out, &commands::simulate(&cfg)?)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
