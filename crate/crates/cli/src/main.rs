use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use steinlab::acceptance::{run_acceptance, AcceptanceOptions};
use steinlab::config::{ExperimentConfig, Mode};
use steinlab::run::{prepare_output, run, RunContext, RunError};
use steinlab_core::Execution;

const EXIT_RUNTIME: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "steinlab", version, about = "Exchangeable-pair Berry-Esseen experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory; overrides STEINLAB_OUT and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exit with code 3 when the run's acceptance check fails.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Kolmogorov distances over the n grid and the log-log rate fit.
    Rates,
    /// Bound terms at each n and the bound-validity comparison.
    Bound,
    /// Exchangeability and regression-condition diagnostics.
    Diagnose,
    /// Tabulate the target law.
    TargetTable,
    /// Run the mode named in the config.
    Run,
    /// Run the acceptance suite.
    Check {
        /// Run only this criterion (repeatable).
        #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=8))]
        criterion: Vec<u8>,
    },
}

fn output_dir(cli: &Cli, config: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("STEINLAB_OUT").map(PathBuf::from))
        .or_else(|| config.and_then(|c| c.outputs.clone()))
        .unwrap_or_else(|| PathBuf::from("steinlab-out"))
}

fn configure_workers(requested: Option<usize>) -> usize {
    let workers = requested
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1);
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        log::warn!("worker pool already configured: {e}");
    }
    workers
}

fn experiment(cli: &Cli, mode: Option<Mode>, workers: usize) -> Result<ExitCode, RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::Validation(anyhow::anyhow!("--config is required for this subcommand")))?;
    let mut config = ExperimentConfig::read(path).map_err(RunError::Validation)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let mode = mode
        .or(config.mode)
        .ok_or_else(|| RunError::Validation(anyhow::anyhow!("config names no mode")))?;
    let ctx = RunContext {
        out: output_dir(cli, Some(&config)),
        config,
        mode,
        exec: if workers > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        },
        workers,
        check: cli.check,
    };
    let outcome = run(&ctx)?;
    println!("{}: {}", mode.as_str(), outcome.summary);
    for f in &outcome.files {
        println!("  wrote {}", f.display());
    }
    Ok(match outcome.check_passed {
        Some(false) => {
            eprintln!("check failed");
            ExitCode::from(EXIT_CHECK)
        }
        _ => ExitCode::SUCCESS,
    })
}

fn acceptance(cli: &Cli, only: Vec<u8>, workers: usize) -> Result<ExitCode, RunError> {
    let out = output_dir(cli, None);
    prepare_output(&out).map_err(RunError::Validation)?;
    let opts = AcceptanceOptions {
        seed: cli.seed.unwrap_or(AcceptanceOptions::default().seed),
        exec: if workers > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        },
        only,
    };
    let report = run_acceptance(&opts).map_err(RunError::Runtime)?;
    let lines: Vec<String> = report.criteria.iter().map(|c| c.line()).collect();
    for l in &lines {
        println!("{l}");
    }
    let write = || -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(out.join("acceptance.json"), text).context("writing acceptance.json")?;
        std::fs::write(out.join("acceptance.txt"), lines.join("\n") + "\n").context("writing acceptance.txt")?;
        Ok(())
    };
    write().map_err(RunError::Runtime)?;
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let workers = configure_workers(cli.workers);
    let result = match cli.command.clone() {
        Command::Rates => experiment(&cli, Some(Mode::Rates), workers),
        Command::Bound => experiment(&cli, Some(Mode::Bound), workers),
        Command::Diagnose => experiment(&cli, Some(Mode::Diagnose), workers),
        Command::TargetTable => experiment(&cli, Some(Mode::TargetTable), workers),
        Command::Run => experiment(&cli, None, workers),
        Command::Check { criterion } => acceptance(&cli, criterion, workers),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                RunError::Validation(_) => EXIT_VALIDATION,
                RunError::Runtime(_) => EXIT_RUNTIME,
            })
        }
    }
}
