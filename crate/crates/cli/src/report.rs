use std::io::Write;

use kacz_core::analysis::ErrorEnsemble;
use kacz_core::{SelectionRule, SolveReport, SolveStatus};

use crate::{method_bound, BenchError, BenchOutcome, BoundValue, MethodRuns};

pub const CURVES_HEADER: &str = "method,trial,k,res,rr,elapsed_ns,set_size";
pub const SUMMARY_HEADER: &str = "method,median_iters,median_time_s,rho_at_final,bound_factor,trials,converged";
pub const RATES_HEADER: &str = "k,grk_bound,grmk_bound,grk_rho,grmk_rho";

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}

fn ensemble(reports: &[SolveReport]) -> Result<ErrorEnsemble, BenchError> {
    let mut e = ErrorEnsemble::new();
    for r in reports {
        e.add_report(r)?;
    }
    Ok(e)
}

/// Writes one row per recorded iterate of every trial.
pub fn write_curves<W: Write>(outcome: &BenchOutcome, mut w: W) -> Result<(), BenchError> {
    writeln!(w, "{CURVES_HEADER}")?;
    for runs in &outcome.methods {
        for (t, rep) in runs.reports.iter().enumerate() {
            for h in &rep.history {
                writeln!(
                    w,
                    "{},{t},{},{},{:e},{},{}",
                    runs.rule,
                    h.k,
                    opt(h.res),
                    h.rr,
                    h.elapsed_ns,
                    h.set_size()
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rule: SelectionRule,
    pub median_iters: f64,
    pub median_time_s: f64,
    /// `ρ_k` of the trial-mean squared error at the longest run's final `k`.
    pub rho_at_final: Option<f64>,
    pub bound: Option<BoundValue>,
    pub trials: usize,
    pub converged: usize,
}

pub fn summarize(outcome: &BenchOutcome, runs: &MethodRuns) -> Result<SummaryRow, BenchError> {
    let reports = &runs.reports;
    let e = ensemble(reports)?;
    let rho_at_final = match e.max_k() {
        0 => None,
        k => e.rate(k).ok(),
    };
    Ok(SummaryRow {
        rule: runs.rule,
        median_iters: median(reports.iter().map(|r| r.iterations as f64).collect()),
        median_time_s: median(reports.iter().map(|r| r.elapsed_ns() as f64 * 1e-9).collect()),
        rho_at_final,
        bound: method_bound(outcome, runs)?,
        trials: reports.len(),
        converged: reports.iter().filter(|r| r.status == SolveStatus::Converged).count(),
    })
}

pub fn write_summary<W: Write>(outcome: &BenchOutcome, mut w: W) -> Result<(), BenchError> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for runs in &outcome.methods {
        let row = summarize(outcome, runs)?;
        let bound = match row.bound {
            Some(BoundValue::Factor(f)) => format!("{f:e}"),
            Some(BoundValue::Vacuous) => "vacuous".to_string(),
            None => String::new(),
        };
        writeln!(
            w,
            "{},{},{:e},{},{},{},{}",
            row.rule,
            row.median_iters,
            row.median_time_s,
            opt(row.rho_at_final),
            bound,
            row.trials,
            row.converged
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub k: usize,
    pub grk_bound: Option<f64>,
    pub grmk_bound: Option<f64>,
    pub grk_rho: Option<f64>,
    pub grmk_rho: Option<f64>,
}

/// Per-`k` empirical rates of GRK and GRMK next to their per-step bound factors.
/// Rows run to the longest trial of either method; methods that were not run
/// leave their columns empty.
pub fn rates_table(outcome: &BenchOutcome) -> Result<Vec<RateRow>, BenchError> {
    let find = |rule: SelectionRule| outcome.methods.iter().find(|m| m.rule == rule);
    let grk = find(SelectionRule::Grk);
    let grmk = find(SelectionRule::Grmk);

    let factor = |runs: Option<&MethodRuns>| -> Result<Option<f64>, BenchError> {
        Ok(match runs {
            Some(r) => match method_bound(outcome, r)? {
                Some(BoundValue::Factor(f)) => Some(f),
                _ => None,
            },
            None => None,
        })
    };
    let grk_bound = factor(grk)?;
    let grmk_bound = factor(grmk)?;
    let grk_e = grk.map(|r| ensemble(&r.reports)).transpose()?;
    let grmk_e = grmk.map(|r| ensemble(&r.reports)).transpose()?;

    let max_k = [&grk_e, &grmk_e]
        .iter()
        .filter_map(|e| e.as_ref().map(ErrorEnsemble::max_k))
        .max()
        .unwrap_or(0);
    let rho = |e: &Option<ErrorEnsemble>, k: usize| e.as_ref().and_then(|e| e.rate(k).ok());
    Ok((1..=max_k)
        .map(|k| RateRow {
            k,
            grk_bound,
            grmk_bound,
            grk_rho: rho(&grk_e, k),
            grmk_rho: rho(&grmk_e, k),
        })
        .collect())
}

pub fn write_rates<W: Write>(outcome: &BenchOutcome, mut w: W) -> Result<(), BenchError> {
    writeln!(w, "{RATES_HEADER}")?;
    for row in rates_table(outcome)? {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.k,
            opt(row.grk_bound),
            opt(row.grmk_bound),
            opt(row.grk_rho),
            opt(row.grmk_rho)
        )?;
    }
    w.flush()?;
    Ok(())
}
