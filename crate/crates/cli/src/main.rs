use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use kacz_bench::config::SEED_ENV;
use kacz_bench::{run, write_curves, write_rates, write_summary, Args, BenchError, BenchOutcome, RunConfig};

fn write_to(
    path: &Path,
    outcome: &BenchOutcome,
    f: fn(&BenchOutcome, BufWriter<File>) -> Result<(), BenchError>,
) -> Result<(), BenchError> {
    f(outcome, BufWriter::new(File::create(path)?))
}

fn main_inner() -> Result<(), BenchError> {
    let args = Args::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = RunConfig::resolve(args, env_seed.as_deref())?;
    let outcome = run(&cfg)?;

    let a = &outcome.problem.a;
    eprintln!(
        "problem: {}x{} ({} nonzeros), seed {}, {} trials",
        a.nrows(),
        a.ncols(),
        a.nnz(),
        cfg.seed,
        cfg.trials
    );
    if !outcome.problem.dropped_rows.is_empty() {
        eprintln!("dropped {} empty rows", outcome.problem.dropped_rows.len());
    }

    if let Some(p) = &cfg.curves_out {
        write_to(p, &outcome, write_curves)?;
    }
    if let Some(p) = &cfg.rates_out {
        write_to(p, &outcome, write_rates)?;
    }
    match &cfg.summary_out {
        Some(p) => write_to(p, &outcome, write_summary)?,
        None => write_summary(&outcome, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kacz-bench: {e}");
            ExitCode::FAILURE
        }
    }
}
