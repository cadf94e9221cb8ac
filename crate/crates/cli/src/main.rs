mod circles;
mod dist;
mod eval;
mod gen;
mod output;
mod report;
mod train;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::output::read_json;

/// Long-tailed classification experiments: mixing-distribution checks,
/// training, calibration evaluation and the two-circle boundary study.
#[derive(Parser, Debug)]
#[command(name = "unimix-lt", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a Gaussian-cluster dataset CSV and a `.meta.json` sidecar.
    GenData {
        #[command(flatten)]
        args: gen::GenArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo class histogram of mixed samples against the closed-form curves.
    VerifyDist {
        #[command(flatten)]
        cfg: dist::DistConfig,
        /// Replay a `config.resolved.json`; the other flags are then ignored.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "verify-dist")]
        out: PathBuf,
    },
    /// Train on generated long-tailed data from a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Calibration and accuracy metrics of a trained model on a dataset CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        metrics: eval::MetricArgs,
        /// Defaults to the directory holding the model.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear boundaries on the two-circle data under four scenarios.
    CirclesDemo {
        #[command(flatten)]
        cfg: circles::CirclesConfig,
        /// Replay a `config.resolved.json`; the other flags are then ignored.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "circles")]
        out: PathBuf,
    },
    /// Collect `report.json` from every run directory into one table.
    Report {
        run_dir: PathBuf,
        /// Defaults to `run_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("UNIMIX_LT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("UNIMIX_LT_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn replay_or<T: serde::de::DeserializeOwned>(config: Option<&Path>, flags: T) -> Result<T> {
    config.map_or(Ok(flags), read_json)
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::GenData { args, out } => gen::run(&args, &out),
        Command::VerifyDist { cfg, config, out } => {
            dist::run(replay_or(config.as_deref(), cfg)?, &out)
        }
        Command::Train { config, out } => train::run(&read_json(&config)?, &out),
        Command::Eval {
            model,
            data,
            metrics,
            out,
        } => {
            let out =
                out.unwrap_or_else(|| model.parent().map(Path::to_path_buf).unwrap_or_default());
            eval::run(&model, &data, &metrics, &out)
        }
        Command::CirclesDemo { cfg, config, out } => {
            circles::run(&replay_or(config.as_deref(), cfg)?, &out)
        }
        Command::Report { run_dir, out } => {
            let out = out.unwrap_or_else(|| run_dir.clone());
            report::run(&run_dir, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let invariant = e.chain().any(|c| {
                c.downcast_ref::<unimix_lt::Error>()
                    .is_some_and(unimix_lt::Error::is_invariant)
            });
            ExitCode::from(if invariant { 2 } else { 1 })
        }
    }
}
