#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod reproduce;
mod table;

use clap::{Parser, ValueEnum};
use config::RunConfig;
use error::CliError;
use soap_core::Execution;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Analyze,
    Simulate,
    Compare,
    Reproduce,
}

/// Exact analysis and simulation of age-based M/G/1 scheduling policies.
#[derive(Debug, Parser)]
#[command(name = "soap", version)]
struct Args {
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Case study for `reproduce`.
    #[arg(long = "case")]
    case_id: Option<String>,
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SOAP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("SOAP_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this mode".into()))?;
    RunConfig::load(path)
}

fn execute(args: &Args) -> Result<(), CliError> {
    threads()?;
    let exec = Execution::Parallel;
    let mut out_path = args.out.clone();
    let mut deferred = None;
    let table = match args.mode {
        Mode::Reproduce => {
            let case = args
                .case_id
                .as_deref()
                .ok_or_else(|| CliError::Config("reproduce needs --case".into()))?;
            let (table, failure) = reproduce::reproduce(case, args.seed.unwrap_or(0), exec)?;
            deferred = failure;
            table
        }
        mode => {
            let cfg = load(args)?;
            if out_path.is_none() {
                out_path = cfg.output.as_ref().map(PathBuf::from);
            }
            match mode {
                Mode::Analyze => commands::analyze(&cfg, exec)?,
                Mode::Compare => commands::compare(&cfg, exec)?,
                Mode::Simulate => commands::simulate(&cfg, args.seed)?,
                Mode::Reproduce => unreachable!(),
            }
        }
    };
    match out_path {
        Some(p) => {
            let f = std::fs::File::create(&p)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
            table.write(std::io::BufWriter::new(f))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock)?;
            let _ = lock.flush();
        }
    }
    deferred.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("soap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
