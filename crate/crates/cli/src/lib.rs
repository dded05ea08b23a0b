//! Benchmark harness for `kacz-core`: generates or loads a consistent system,
//! runs each requested method over independent seeded trials, and writes
//! convergence curves, per-method summaries and rate/bound comparisons as CSV.

pub mod config;
mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use kacz_core::analysis::{self, SpectralData};
use kacz_core::linalg::min_norm_solution;
use kacz_core::problems::{self, Problem};
use kacz_core::{KaczError, SelectionRule, SolveReport};

pub use config::{Args, RunConfig};
pub use report::{
    rates_table, summarize, write_curves, write_rates, write_summary, RateRow, SummaryRow, CURVES_HEADER, RATES_HEADER,
    SUMMARY_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] KaczError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

/// All trials of one method.
#[derive(Debug, Clone)]
pub struct MethodRuns {
    pub rule: SelectionRule,
    /// One report per trial, in trial order.
    pub reports: Vec<SolveReport>,
}

/// Everything a benchmark run produced.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub problem: Problem,
    /// Minimum-norm solution used as the RES reference.
    pub x_ref: Vec<f64>,
    /// Only computed when a method with a bound (grk, grmk, gmbk) was run.
    pub spectral: Option<SpectralData>,
    pub methods: Vec<MethodRuns>,
}

/// Seed of trial `trial`'s solver generator; shared by all methods so they see
/// the same random stream in the same trial.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ (trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn has_bound(rule: &SelectionRule) -> bool {
    matches!(rule, SelectionRule::Grk | SelectionRule::Grmk | SelectionRule::Gmbk)
}

/// Runs the benchmark described by `cfg`. No files are written.
pub fn run(cfg: &RunConfig) -> Result<BenchOutcome, BenchError> {
    let problem = problems::generate(&cfg.problem)?;
    let x_ref = min_norm_solution(&problem.a, &problem.b)?;
    let spectral = cfg
        .methods
        .iter()
        .any(has_bound)
        .then(|| SpectralData::new(&problem.a));

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    let x0 = vec![0.0; problem.a.ncols()];
    let methods = cfg
        .methods
        .iter()
        .map(|&rule| {
            let reports = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, t));
                        kacz_core::solve(rule, &problem.a, &problem.b, &x0, &cfg.stop, &mut rng, Some(&x_ref))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?;
            Ok(MethodRuns { rule, reports })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;

    Ok(BenchOutcome {
        problem,
        x_ref,
        spectral,
        methods,
    })
}

/// A per-step convergence factor as reported in the summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Factor(f64),
    /// Every factor along the recorded runs was `≤ 0`.
    Vacuous,
}

/// Bound factor reported for a method: the loosest (largest) value over its
/// trials, or `None` for methods without a bound.
pub fn method_bound(outcome: &BenchOutcome, runs: &MethodRuns) -> Result<Option<BoundValue>, BenchError> {
    let Some(s) = &outcome.spectral else {
        return Ok(None);
    };
    let a = &outcome.problem.a;
    match runs.rule {
        SelectionRule::Grk => Ok(Some(BoundValue::Factor(analysis::grk_factor(s)))),
        SelectionRule::Grmk => {
            let mut worst: Option<f64> = None;
            for rep in runs.reports.iter().filter(|r| r.iterations > 0) {
                let (sets, rows) = analysis::run_selections(rep);
                let g = analysis::grmk_bound_general(a, s, &sets, &rows)?.general;
                worst = Some(worst.map_or(g, |w| w.max(g)));
            }
            Ok(worst.map(BoundValue::Factor))
        }
        SelectionRule::Gmbk => {
            let mut any = false;
            let mut worst: Option<f64> = None;
            for rep in &runs.reports {
                let factors = analysis::gmbk_bound(a, s, &analysis::run_blocks(rep));
                for f in factors.iter().skip(1) {
                    any = true;
                    if !f.is_vacuous() {
                        worst = Some(worst.map_or(f.value(), |w| w.max(f.value())));
                    }
                }
            }
            Ok(match (worst, any) {
                (Some(w), _) => Some(BoundValue::Factor(w)),
                (None, true) => Some(BoundValue::Vacuous),
                (None, false) => None,
            })
        }
        _ => Ok(None),
    }
}
