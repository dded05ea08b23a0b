//! Iteration state, stopping rules and the [`solve`] driver.
//!
//! Each [`SelectionRule`] runs the same loop: threshold, working set,
//! sample or argmax, update. The residual `r = b − Ax` is maintained
//! incrementally and recomputed from scratch every
//! [`RESIDUAL_REFRESH_INTERVAL`] iterations.

pub mod block;
pub mod single;

use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::analysis::{relative_residual, relative_solution_error};
use crate::linalg::{min_norm_solution, norm_inf, norm_sq, RowMatrix};
use crate::selection::{self, IndexSet, SelectionRule};
use crate::{KaczError, Result};

pub use block::{
    averaged_block_step, block_project, gbk_step, gdbk_eta, gdbk_step, gmbk_step, gmbk_xi_step, WeightScheme,
};
pub use single::{greedy_kaczmarz_choose, grk_choose, grmk_choose, grmk_step, kaczmarz_step};

pub const RESIDUAL_REFRESH_INTERVAL: usize = 1000;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Iteration cap factor when none is given: `max_iters = 200·m`.
pub const DEFAULT_ITERS_PER_ROW: usize = 200;

/// What the previous iteration selected.
#[derive(Debug, Clone, PartialEq)]
pub enum LastChoice {
    Row(usize),
    Set(IndexSet),
}

/// Current iterate `x_k` and its residual `r_k = b − A·x_k`.
#[derive(Debug, Clone)]
pub struct IterState {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub k: usize,
    pub last: Option<LastChoice>,
}

impl IterState {
    pub fn new(a: &RowMatrix, b: &[f64], x0: &[f64]) -> Result<Self> {
        check_dims(a, b, x0)?;
        Ok(IterState {
            x: x0.to_vec(),
            r: a.residual(b, x0),
            k: 0,
            last: None,
        })
    }

    /// `‖r − (b − A·x)‖∞`
    pub fn residual_drift(&self, a: &RowMatrix, b: &[f64]) -> f64 {
        let fresh = a.residual(b, &self.x);
        self.r.iter().zip(&fresh).fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()))
    }

    pub fn refresh_residual(&mut self, a: &RowMatrix, b: &[f64]) {
        self.r = a.residual(b, &self.x);
    }
}

fn check_dims(a: &RowMatrix, b: &[f64], x0: &[f64]) -> Result<()> {
    if b.len() != a.nrows() || x0.len() != a.ncols() {
        return Err(KaczError::contract(format!(
            "dimension mismatch: A is {}x{}, b has {}, x0 has {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            x0.len()
        )));
    }
    Ok(())
}

/// Stopping metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `‖x_k − x⋆‖²/‖x⋆‖²`
    Res,
    /// `‖b − A·x_k‖²/‖b − A·x₀‖²`
    Rr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub tol: f64,
    pub metric: Metric,
    /// `None` means `200·m`.
    pub max_iters: Option<usize>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            tol: DEFAULT_TOL,
            metric: Metric::Res,
            max_iters: None,
        }
    }
}

impl StopCriteria {
    pub fn new(tol: f64, metric: Metric, max_iters: Option<usize>) -> Result<Self> {
        let stop = StopCriteria { tol, metric, max_iters };
        stop.validate()?;
        Ok(stop)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(KaczError::InvalidParameter(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iters == Some(0) {
            return Err(KaczError::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolved_max_iters(&self, m: usize) -> usize {
        self.max_iters.unwrap_or(DEFAULT_ITERS_PER_ROW * m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
}

/// Metrics at `x_k` and the selection that produced `x_k` (nothing for `k = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub res: Option<f64>,
    pub rr: f64,
    /// Cumulative time spent in solver steps up to `x_k`.
    pub elapsed_ns: u64,
    /// Row projected onto (single-row rules).
    pub row: Option<usize>,
    /// Working set `U_k`/`I_k` or the projected block.
    pub set: Option<IndexSet>,
}

impl StepRecord {
    pub fn set_size(&self) -> usize {
        match (&self.set, self.row) {
            (Some(s), _) => s.len(),
            (None, Some(_)) => 1,
            (None, None) => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub rule: SelectionRule,
    pub iterations: usize,
    pub status: SolveStatus,
    /// One record per iterate, `history.len() == iterations + 1`.
    pub history: Vec<StepRecord>,
    pub final_x: Vec<f64>,
    /// The reference solution RES was measured against, if any.
    pub x_star: Option<Vec<f64>>,
}

impl SolveReport {
    pub fn elapsed_ns(&self) -> u64 {
        self.history.last().map_or(0, |h| h.elapsed_ns)
    }

    /// RES history, when a reference solution was available.
    pub fn res_history(&self) -> Option<Vec<f64>> {
        self.history.iter().map(|h| h.res).collect()
    }
}

struct Step {
    row: Option<usize>,
    set: Option<IndexSet>,
}

/// Runs `rule` from `x0` until the chosen metric drops below `stop.tol` or
/// the iteration cap is reached.
///
/// When `x_star` is omitted and the metric is RES, the minimum-norm solution
/// is computed once up front with a dense SVD. With the RR metric and no
/// `x_star`, RES is not recorded.
pub fn solve<R: Rng + ?Sized>(
    rule: SelectionRule,
    a: &RowMatrix,
    b: &[f64],
    x0: &[f64],
    stop: &StopCriteria,
    rng: &mut R,
    x_star: Option<&[f64]>,
) -> Result<SolveReport> {
    rule.validate()?;
    stop.validate()?;
    check_dims(a, b, x0)?;
    if let Some(xs) = x_star {
        if xs.len() != a.ncols() {
            return Err(KaczError::contract("x_star length does not match column count"));
        }
    }

    let x_star: Option<Vec<f64>> = match (x_star, stop.metric) {
        (Some(xs), _) => Some(xs.to_vec()),
        (None, Metric::Res) => Some(min_norm_solution(a, b)?),
        (None, Metric::Rr) => None,
    };

    let mut state = IterState::new(a, b, x0)?;
    let r0_sq = norm_sq(&state.r);
    let max_iters = stop.resolved_max_iters(a.nrows());

    let res_at = |x: &[f64]| -> Option<f64> {
        x_star.as_deref().and_then(|xs| relative_solution_error(x, xs).ok())
    };
    let rr_at = |r: &[f64]| if r0_sq > 0.0 { relative_residual(r, r0_sq) } else { 0.0 };

    let mut history = vec![StepRecord {
        k: 0,
        res: res_at(&state.x),
        rr: rr_at(&state.r),
        elapsed_ns: 0,
        row: None,
        set: None,
    }];

    let finish = |state: IterState, history: Vec<StepRecord>, status, x_star| SolveReport {
        rule,
        iterations: state.k,
        status,
        history,
        final_x: state.x,
        x_star,
    };

    if r0_sq == 0.0 {
        return Ok(finish(state, history, SolveStatus::Converged, x_star));
    }
    if stop.metric == Metric::Res && history[0].res.is_none() {
        return Err(KaczError::DegenerateReference);
    }

    let rk_sampler = match rule {
        SelectionRule::Randomized => Some(
            WeightedIndex::new(a.row_sq_norms())
                .map_err(|e| KaczError::contract(format!("row-norm sampler: {e}")))?,
        ),
        _ => None,
    };

    let mut elapsed_ns: u64 = 0;
    let b_scale = 1.0 + norm_inf(b);
    loop {
        let current = history.last().expect("history starts with k = 0");
        let metric = match stop.metric {
            Metric::Res => current.res.expect("RES available"),
            Metric::Rr => current.rr,
        };
        if metric < stop.tol {
            return Ok(finish(state, history, SolveStatus::Converged, x_star));
        }
        if state.k >= max_iters {
            return Ok(finish(state, history, SolveStatus::MaxIters, x_star));
        }

        let started = Instant::now();
        let Some(step) = advance(rule, &mut state, a, rk_sampler.as_ref(), rng)? else {
            // exact zero residual
            return Ok(finish(state, history, SolveStatus::Converged, x_star));
        };
        state.k += 1;
        if state.k % RESIDUAL_REFRESH_INTERVAL == 0 {
            debug_assert!(state.residual_drift(a, b) <= 1e-8 * b_scale);
            state.refresh_residual(a, b);
        }
        elapsed_ns += started.elapsed().as_nanos() as u64;

        history.push(StepRecord {
            k: state.k,
            res: res_at(&state.x),
            rr: rr_at(&state.r),
            elapsed_ns,
            row: step.row,
            set: step.set,
        });
    }
}

fn advance<R: Rng + ?Sized>(
    rule: SelectionRule,
    state: &mut IterState,
    a: &RowMatrix,
    rk_sampler: Option<&WeightedIndex<f64>>,
    rng: &mut R,
) -> Result<Option<Step>> {
    let single = |state: &mut IterState, chosen: Option<(Option<IndexSet>, usize)>| {
        chosen.map(|(set, i)| {
            kaczmarz_step(state, a, i);
            Step { row: Some(i), set }
        })
    };
    let block = |set: Option<IndexSet>| set.map(|s| Step { row: None, set: Some(s) });

    let step = match rule {
        SelectionRule::Randomized => {
            if state.r.iter().all(|&v| v == 0.0) {
                None
            } else {
                let i = rk_sampler.expect("sampler built for RK").sample(rng);
                single(state, Some((None, i)))
            }
        }
        SelectionRule::MaxResidual => {
            let i = selection::argmax_residual(&state.r);
            let chosen = (state.r[i] != 0.0).then_some((None, i));
            single(state, chosen)
        }
        SelectionRule::MaxDistance => {
            let i = selection::argmax_distance(&state.r, a);
            let chosen = (state.r[i] != 0.0).then_some((None, i));
            single(state, chosen)
        }
        SelectionRule::Grk => {
            let chosen = grk_choose(&state.r, a, rng).map(|(s, i)| (Some(s), i));
            single(state, chosen)
        }
        SelectionRule::Grmk => {
            let chosen = grmk_choose(&state.r, a, 0.5, rng).map(|(s, i)| (Some(s), i));
            single(state, chosen)
        }
        SelectionRule::GrmkRelaxed { theta } => {
            let chosen = grmk_choose(&state.r, a, theta, rng).map(|(s, i)| (Some(s), i));
            single(state, chosen)
        }
        SelectionRule::GreedyKaczmarz => {
            let chosen = greedy_kaczmarz_choose(&state.r, a).map(|(s, i)| (Some(s), i));
            single(state, chosen)
        }
        SelectionRule::Gbk { eta } => block(gbk_step(state, a, eta)?),
        SelectionRule::Gdbk => block(gdbk_step(state, a)?),
        SelectionRule::Gmbk => block(gmbk_step(state, a)?),
        SelectionRule::GmbkXi { xi } => block(gmbk_xi_step(state, a, xi)?),
        SelectionRule::AveragedBlock => match selection::grmk_threshold(&state.r, a, 0.5) {
            None => None,
            Some(delta) => {
                let set = selection::grmk_set(&state.r, delta);
                averaged_block_step(state, a, &set, &WeightScheme::default())?;
                Some(Step { row: None, set: Some(set) })
            }
        },
    };
    Ok(step)
}
