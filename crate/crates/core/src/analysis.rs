//! Convergence factors, empirical convergence rates and run metrics.
//!
//! Bounds depend on `λ_min(AᵀA)` (smallest positive eigenvalue), `‖A‖_F²`,
//! the row norms, and the working sets a run actually produced. All factor
//! functions return the raw expression; nothing is clamped.
//!
//! GRMK (single row), step `k ≥ 1`:
//!
//! ```text
//! 1 − ½ · min_{i≠i_{k−1}}‖A⁽ⁱ⁾‖² / max_{i∈I_k}‖A⁽ⁱ⁾‖² · λ_min/‖A‖_F² · (‖A‖_F²/(‖A‖_F² − min_i‖A⁽ⁱ⁾‖²) + 1)
//! ```
//!
//! and `1 − min_i‖A⁽ⁱ⁾‖²/max_{i∈I₀}‖A⁽ⁱ⁾‖² · λ_min/‖A‖_F²` for the first step.
//! GRK uses the same expression with the norm ratio replaced by 1.
//!
//! GMBK (block), step `k ≥ 1`:
//!
//! ```text
//! 1 − ½ · |I_k| · min_{i∉I_{k−1}}‖A⁽ⁱ⁾‖² / λ_max(A_{I_k}ᵀA_{I_k}) · λ_min/‖A‖_F² · (‖A‖_F²/(‖A‖_F² − ‖A_{I_{k−1}}‖_F²) + 1)
//! ```
//!
//! and `1 − |I₀| · min_i‖A⁽ⁱ⁾‖²/λ_max(A_{I₀}ᵀA_{I₀}) · λ_min/‖A‖_F²` for the first step.
//! These can be ≤ 0 for large blocks; such factors are reported as vacuous.

use crate::linalg::{dist_sq, lambda_max_block, lambda_min_pos, norm_sq, NeumaierSum, RowMatrix};
use crate::selection::IndexSet;
use crate::solvers::SolveReport;
use crate::{KaczError, Result};

/// `RES = ‖x − x⋆‖²/‖x⋆‖²`
pub fn relative_solution_error(x: &[f64], x_star: &[f64]) -> Result<f64> {
    let denom = norm_sq(x_star);
    if denom == 0.0 {
        return Err(KaczError::DegenerateReference);
    }
    Ok(dist_sq(x, x_star) / denom)
}

/// `RR = ‖r‖²/‖r₀‖²` given `‖r₀‖²`.
pub fn relative_residual(r: &[f64], r0_sq: f64) -> f64 {
    norm_sq(r) / r0_sq
}

/// `(RES, RR)` at an iterate with residual `r`, against `x⋆` and the initial residual `r0`.
pub fn metrics(x: &[f64], x_star: &[f64], r: &[f64], r0: &[f64]) -> Result<(f64, f64)> {
    let res = relative_solution_error(x, x_star)?;
    let r0_sq = norm_sq(r0);
    if r0_sq == 0.0 {
        return Err(KaczError::DegenerateResidual);
    }
    Ok((res, relative_residual(r, r0_sq)))
}

/// Matrix quantities shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub lambda_min: f64,
    pub frob_sq: f64,
    pub min_row_sq: f64,
}

impl SpectralData {
    /// Computes `λ_min(AᵀA)` with a dense eigendecomposition.
    pub fn new(a: &RowMatrix) -> Self {
        Self::with_lambda_min(a, lambda_min_pos(a))
    }

    pub fn with_lambda_min(a: &RowMatrix, lambda_min: f64) -> Self {
        SpectralData {
            lambda_min,
            frob_sq: a.frob_sq(),
            min_row_sq: a.row_sq_norms().iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn ratio(&self) -> f64 {
        self.lambda_min / self.frob_sq
    }

    /// `‖A‖_F²/(‖A‖_F² − min_i‖A⁽ⁱ⁾‖²) + 1`
    fn greedy_gain(&self) -> f64 {
        self.frob_sq / (self.frob_sq - self.min_row_sq) + 1.0
    }
}

fn max_norm_over(a: &RowMatrix, set: &IndexSet) -> f64 {
    set.indices().iter().map(|&i| a.row_sq_norm(i)).fold(0.0, f64::max)
}

/// GRK per-step factor.
pub fn grk_factor(s: &SpectralData) -> f64 {
    1.0 - 0.5 * s.ratio() * s.greedy_gain()
}

/// GRMK first-step factor, with `I₀` the first working set.
pub fn grmk_first_factor(a: &RowMatrix, s: &SpectralData, first_set: &IndexSet) -> f64 {
    1.0 - s.min_row_sq / max_norm_over(a, first_set) * s.ratio()
}

/// `min_{i≠prev}‖A⁽ⁱ⁾‖² / max_{i∈I_k}‖A⁽ⁱ⁾‖²`
pub fn grmk_norm_ratio(a: &RowMatrix, set: &IndexSet, prev_row: usize) -> f64 {
    let min_other = a
        .row_sq_norms()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != prev_row)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    min_other / max_norm_over(a, set)
}

/// GRMK factor for a step from `x_k` (`k ≥ 1`) with working set `I_k` after projecting on `prev_row`.
pub fn grmk_step_factor(a: &RowMatrix, s: &SpectralData, set: &IndexSet, prev_row: usize) -> f64 {
    grmk_factor_from_ratio(s, grmk_norm_ratio(a, set, prev_row))
}

/// GRMK factor `1 − ½·ratio·λ_min/‖A‖_F²·(…)`, with `ratio` either a single step's norm ratio or `α`.
pub fn grmk_factor_from_ratio(s: &SpectralData, ratio: f64) -> f64 {
    1.0 - 0.5 * ratio * s.ratio() * s.greedy_gain()
}

/// GRMK bounds evaluated along a recorded run.
#[derive(Debug, Clone, PartialEq)]
pub struct GrmkBound {
    /// First-step factor from `I₀`.
    pub first: f64,
    /// Per-step factors for steps `k = 1, 2, …`.
    pub per_step: Vec<f64>,
    /// Minimum norm ratio over steps `k ≥ 1` (1 when the run has a single step).
    pub alpha: f64,
    /// Per-step factor with the ratio replaced by `alpha`.
    pub general: f64,
}

impl GrmkBound {
    /// Bound on `E‖x_k − x⋆‖² / ‖x₀ − x⋆‖²`: `general^{k−1}·first`.
    pub fn cumulative(&self, k: usize) -> f64 {
        match k {
            0 => 1.0,
            _ => self.general.powi(k as i32 - 1) * self.first,
        }
    }
}

/// Evaluates the GRMK factors on a run's working sets `sets[k] = I_k` and
/// chosen rows `rows[k] = i_k`.
pub fn grmk_bound_general(a: &RowMatrix, s: &SpectralData, sets: &[IndexSet], rows: &[usize]) -> Result<GrmkBound> {
    if sets.is_empty() || sets.len() != rows.len() {
        return Err(KaczError::contract(format!(
            "grmk bound needs matching nonempty histories ({} sets, {} rows)",
            sets.len(),
            rows.len()
        )));
    }
    let first = grmk_first_factor(a, s, &sets[0]);
    let ratios: Vec<f64> = (1..sets.len())
        .map(|k| grmk_norm_ratio(a, &sets[k], rows[k - 1]))
        .collect();
    let per_step = ratios.iter().map(|&q| grmk_factor_from_ratio(s, q)).collect();
    let alpha = ratios.iter().copied().fold(1.0, f64::min);
    Ok(GrmkBound {
        first,
        per_step,
        alpha,
        general: grmk_factor_from_ratio(s, alpha),
    })
}

/// Working sets and rows of a single-row greedy run (`I_k`, `i_k` for each step).
pub fn run_selections(report: &SolveReport) -> (Vec<IndexSet>, Vec<usize>) {
    report.history[1..]
        .iter()
        .filter_map(|h| Some((h.set.clone()?, h.row?)))
        .unzip()
}

/// Blocks projected onto by a block run.
pub fn run_blocks(report: &SolveReport) -> Vec<IndexSet> {
    report.history[1..].iter().filter_map(|h| h.set.clone()).collect()
}

/// A convergence factor that may be vacuous (`≤ 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor(pub f64);

impl Factor {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_vacuous(self) -> bool {
        self.0.is_nan() || self.0 <= 0.0
    }
}

/// GMBK per-step factors for blocks `sets[k] = I_k`.
pub fn gmbk_bound(a: &RowMatrix, s: &SpectralData, sets: &[IndexSet]) -> Vec<Factor> {
    sets.iter()
        .enumerate()
        .map(|(k, set)| {
            let lambda_block = lambda_max_block(a, set.indices());
            let size = set.len() as f64;
            if k == 0 {
                return Factor(1.0 - size * s.min_row_sq / lambda_block * s.ratio());
            }
            let prev = &sets[k - 1];
            let min_outside = a
                .row_sq_norms()
                .iter()
                .enumerate()
                .filter(|&(i, _)| !prev.contains(i))
                .map(|(_, &v)| v)
                .fold(f64::INFINITY, f64::min);
            let prev_frob: f64 = prev.indices().iter().map(|&i| a.row_sq_norm(i)).sum();
            let gain = s.frob_sq / (s.frob_sq - prev_frob) + 1.0;
            Factor(1.0 - 0.5 * size * min_outside / lambda_block * s.ratio() * gain)
        })
        .collect()
}

/// `ρ_k = (E_k/E_0)^{1/k}` from a history of (mean) squared errors `E_k = E‖x_k − x⋆‖²`.
pub fn empirical_rate(error_history: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k >= error_history.len() {
        return Err(KaczError::contract(format!(
            "empirical_rate: k = {k} outside 1..{}",
            error_history.len()
        )));
    }
    let e0 = error_history[0];
    if e0.is_nan() || e0 <= 0.0 {
        return Err(KaczError::contract("empirical_rate: zero initial error"));
    }
    Ok((error_history[k] / e0).powf(1.0 / k as f64))
}

/// Sample means of `‖x_k − x⋆‖²` over independent trials.
///
/// Trials that stopped before iteration `k` contribute their last recorded error.
#[derive(Debug, Clone, Default)]
pub struct ErrorEnsemble {
    trials: Vec<Vec<f64>>,
}

impl ErrorEnsemble {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one trial's squared-error history (index = iteration).
    pub fn add_trial(&mut self, errors: Vec<f64>) {
        assert!(!errors.is_empty(), "empty error history");
        self.trials.push(errors);
    }

    /// Adds a run's squared errors `RES_k·‖x⋆‖²`. Runs without RES are rejected.
    pub fn add_report(&mut self, report: &SolveReport) -> Result<()> {
        let xs = report
            .x_star
            .as_deref()
            .ok_or_else(|| KaczError::contract("run has no reference solution"))?;
        let scale = norm_sq(xs);
        let res = report
            .res_history()
            .ok_or_else(|| KaczError::contract("run has no RES history"))?;
        self.add_trial(res.into_iter().map(|v| v * scale).collect());
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.trials.len()
    }

    /// Longest recorded history minus one.
    pub fn max_k(&self) -> usize {
        self.trials.iter().map(|t| t.len() - 1).max().unwrap_or(0)
    }

    pub fn mean(&self, k: usize) -> f64 {
        let sum: NeumaierSum = self
            .trials
            .iter()
            .map(|t| t.get(k).copied().unwrap_or(t[t.len() - 1]))
            .collect();
        sum.total() / self.trials.len() as f64
    }

    /// Mean errors for `k = 0..=max_k`.
    pub fn means(&self) -> Vec<f64> {
        (0..=self.max_k()).map(|k| self.mean(k)).collect()
    }

    pub fn rate(&self, k: usize) -> Result<f64> {
        let e0 = self.mean(0);
        if k == 0 || e0.is_nan() || e0 <= 0.0 {
            return Err(KaczError::contract("rate needs k ≥ 1 and a nonzero initial error"));
        }
        Ok((self.mean(k) / e0).powf(1.0 / k as f64))
    }

    /// `ρ_k` for `k = 1..=max_k`.
    pub fn rates(&self) -> Vec<f64> {
        (1..=self.max_k()).filter_map(|k| self.rate(k).ok()).collect()
    }
}

/// Theoretical factors and an empirical rate history for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub grmk_first_step: Option<f64>,
    pub grmk_general: Option<f64>,
    pub grk_factor: f64,
    pub gmbk_first: Option<Factor>,
    /// Largest non-vacuous GMBK factor over steps `k ≥ 1`.
    pub gmbk_general: Option<f64>,
    pub rho_history: Vec<f64>,
}

/// Assembles a [`BoundReport`] from a GRMK run and/or a GMBK run.
pub fn bound_report(
    a: &RowMatrix,
    s: &SpectralData,
    grmk_run: Option<&SolveReport>,
    gmbk_run: Option<&SolveReport>,
    rho_history: Vec<f64>,
) -> Result<BoundReport> {
    let grmk = match grmk_run {
        Some(run) if run.iterations > 0 => {
            let (sets, rows) = run_selections(run);
            Some(grmk_bound_general(a, s, &sets, &rows)?)
        }
        _ => None,
    };
    let gmbk = gmbk_run.map(|run| gmbk_bound(a, s, &run_blocks(run))).unwrap_or_default();
    Ok(BoundReport {
        grmk_first_step: grmk.as_ref().map(|g| g.first),
        grmk_general: grmk.as_ref().map(|g| g.general),
        grk_factor: grk_factor(s),
        gmbk_first: gmbk.first().copied(),
        gmbk_general: gmbk
            .iter()
            .skip(1)
            .filter(|f| !f.is_vacuous())
            .map(|f| f.value())
            .reduce(f64::max),
        rho_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> RowMatrix {
        RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn reference_factors() {
        let a = reference();
        let s = SpectralData::new(&a);
        assert!((s.lambda_min - 1.0).abs() < 1e-12);
        let i0 = IndexSet::new(vec![2], 7.375);
        assert!((grmk_first_factor(&a, &s, &i0) - 0.875).abs() < 1e-12);
        let grk = grk_factor(&s);
        assert!((grk - (1.0 - 0.5 * 0.25 * (4.0 / 3.0 + 1.0))).abs() < 1e-12);
        assert!((grk - 0.708_333_333_333_333_3).abs() < 1e-12);
        let g = gmbk_bound(&a, &s, &[i0]);
        assert!((g[0].value() - 0.875).abs() < 1e-12);
        assert!(!g[0].is_vacuous());
    }

    #[test]
    fn unit_rows_reduce_to_grk() {
        // orthonormal rows of a 3x3 rotation-free identity plus scaling-free rows
        let a = RowMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.6, 0.8, 0.0],
            vec![0.0, 0.6, 0.8],
        ])
        .unwrap();
        let s = SpectralData::new(&a);
        let set = IndexSet::new(vec![1, 3], 0.0);
        let f = grmk_step_factor(&a, &s, &set, 0);
        let m = 4.0;
        let want = 1.0 - 0.5 * (s.lambda_min / m) * (m / (m - 1.0) + 1.0);
        assert!((f - want).abs() < 1e-12);
        assert!((f - grk_factor(&s)).abs() < 1e-12);
    }

    #[test]
    fn grmk_general_uses_min_ratio() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let s = SpectralData::new(&a);
        let sets = vec![
            IndexSet::new(vec![1], 0.0),
            IndexSet::new(vec![2], 0.0),
            IndexSet::new(vec![1, 2], 0.0),
        ];
        let rows = vec![1, 2, 1];
        let g = grmk_bound_general(&a, &s, &sets, &rows).unwrap();
        // step 1: min over i≠1 = 1, max over {2} = 2 → 0.5; step 2: min over i≠2 = 1, max = 4 → 0.25
        assert!((g.alpha - 0.25).abs() < 1e-15);
        assert_eq!(g.per_step.len(), 2);
        assert!(g.general >= g.per_step[0]);
        assert!(g.general >= grk_factor(&s));
        assert!((g.cumulative(3) - g.general.powi(2) * g.first).abs() < 1e-15);
        assert!(grmk_bound_general(&a, &s, &[], &[]).is_err());
    }

    #[test]
    fn gmbk_vacuous_is_reported() {
        // identity: a full block gives 1 − m·1/1·(1/m) = 0 → vacuous
        let a = RowMatrix::identity(3).unwrap();
        let s = SpectralData::new(&a);
        let f = gmbk_bound(&a, &s, &[IndexSet::new(vec![0, 1, 2], 0.0)]);
        assert!(f[0].value().abs() < 1e-15);
        assert!(f[0].is_vacuous());
    }

    #[test]
    fn metrics_examples() {
        let xs = [1.0, 2.0];
        let r0 = [1.0, 2.0, 3.0];
        let (res, rr) = metrics(&xs, &xs, &[0.0; 3], &r0).unwrap();
        assert_eq!((res, rr), (0.0, 0.0));
        let (_, rr) = metrics(&[0.0, 0.0], &xs, &r0, &r0).unwrap();
        assert_eq!(rr, 1.0);
        let (res, _) = metrics(&[1.5, 1.5], &xs, &[-0.5, 0.5, 0.0], &r0).unwrap();
        assert!((res - 0.1).abs() < 1e-15);
        assert!(matches!(metrics(&xs, &[0.0, 0.0], &r0, &r0), Err(KaczError::DegenerateReference)));
        assert!(matches!(metrics(&xs, &xs, &r0, &[0.0; 3]), Err(KaczError::DegenerateResidual)));
    }

    #[test]
    fn empirical_rate_examples() {
        let halving: Vec<f64> = (0..10).map(|k| 0.5f64.powi(k)).collect();
        for k in 1..10 {
            assert!((empirical_rate(&halving, k).unwrap() - 0.5).abs() < 1e-14);
        }
        assert_eq!(empirical_rate(&[4.0, 1.0, 0.0], 2).unwrap(), 0.0);
        assert!(empirical_rate(&[1.0], 0).is_err());
        assert!(empirical_rate(&[1.0, 0.5], 2).is_err());
    }

    #[test]
    fn ensemble_pads_with_last_error() {
        let mut e = ErrorEnsemble::new();
        e.add_trial(vec![1.0, 0.5, 0.25]);
        e.add_trial(vec![1.0, 0.0]);
        assert_eq!(e.max_k(), 2);
        assert_eq!(e.means(), vec![1.0, 0.25, 0.125]);
        assert!((e.rate(2).unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.rates().len(), 2);
    }
}
