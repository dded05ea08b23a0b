//! Greedy thresholds, working index sets and row sampling rules.
//!
//! Two families are covered:
//!
//! - residual-based (Motzkin): `δ_k` from [`grmk_threshold`] or
//!   [`gmbk_xi_threshold`], working set `I_k = {i : |rᵢ|² ≥ δ_k}`, rows sampled
//!   proportionally to the distance `|rᵢ|²/‖A⁽ⁱ⁾‖²`;
//! - distance-based: `ε_k` from [`grk_threshold`] or [`gbk_threshold`],
//!   working set `U_k = {i : |rᵢ|²/‖A⁽ⁱ⁾‖² ≥ ε_k}`, rows sampled
//!   proportionally to `|rᵢ|²`.
//!
//! Thresholds return `None` when the residual is identically zero: the
//! iteration has converged and no working set exists.
//!
//! Set membership uses `≥` with a relative guard of [`MEMBERSHIP_GUARD`] so
//! that the maximizing row is never lost to rounding, and rows with an
//! exactly zero residual are never members. Argmax ties go to the smallest
//! row index.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::linalg::RowMatrix;
use crate::{KaczError, Result};

/// Relative slack on threshold comparisons: `value ≥ threshold·(1 − MEMBERSHIP_GUARD)`.
pub const MEMBERSHIP_GUARD: f64 = 1e-14;

/// Sorted, duplicate-free set of row indices with the threshold that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    indices: Vec<usize>,
    threshold: f64,
}

impl IndexSet {
    pub fn new(mut indices: Vec<usize>, threshold: f64) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet { indices, threshold }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Row-selection strategy of a solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    /// Randomized Kaczmarz: rows sampled with probability `‖A⁽ⁱ⁾‖²/‖A‖_F²`.
    Randomized,
    /// Motzkin: the row with the largest `|rᵢ|`.
    MaxResidual,
    /// The row with the largest distance `|rᵢ|²/‖A⁽ⁱ⁾‖²`.
    MaxDistance,
    /// Greedy randomized Kaczmarz.
    Grk,
    /// Greedy randomized Motzkin-Kaczmarz (`θ = 1/2`).
    Grmk,
    /// Relaxed GRMK with `δ_k = θ·max|rᵢ|² + (1−θ)·Σ (‖A⁽ⁱ⁾‖²/‖A‖_F²)|rᵢ|²`.
    GrmkRelaxed { theta: f64 },
    /// Greedy Kaczmarz: `θ = 1` and the maximum-distance row of `I_k`.
    GreedyKaczmarz,
    /// Greedy block Kaczmarz with `ε_k = η·max dᵢ`.
    Gbk { eta: f64 },
    /// Greedy distance block Kaczmarz: GBK with the per-step `η` matching GRK's `ε_k`.
    Gdbk,
    /// Greedy Motzkin block Kaczmarz.
    Gmbk,
    /// GMBK with `δ_k = ξ·max|rᵢ|²`.
    GmbkXi { xi: f64 },
    /// Averaged projections over the GMBK working set.
    AveragedBlock,
}

impl SelectionRule {
    pub fn grmk_relaxed(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(KaczError::InvalidParameter(format!("theta = {theta} outside [0, 1]")));
        }
        Ok(SelectionRule::GrmkRelaxed { theta })
    }

    pub fn gbk(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(KaczError::InvalidParameter(format!("eta = {eta} outside (0, 1]")));
        }
        Ok(SelectionRule::Gbk { eta })
    }

    pub fn gmbk_xi(xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(KaczError::InvalidParameter(format!("xi = {xi} outside (0, 1]")));
        }
        Ok(SelectionRule::GmbkXi { xi })
    }

    /// Re-checks parameter ranges (variants can be built directly).
    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionRule::GrmkRelaxed { theta } => Self::grmk_relaxed(theta).map(drop),
            SelectionRule::Gbk { eta } => Self::gbk(eta).map(drop),
            SelectionRule::GmbkXi { xi } => Self::gmbk_xi(xi).map(drop),
            _ => Ok(()),
        }
    }

    /// True for rules that use a pseudoinverse block projection.
    pub fn is_block(&self) -> bool {
        matches!(
            self,
            SelectionRule::Gbk { .. } | SelectionRule::Gdbk | SelectionRule::Gmbk | SelectionRule::GmbkXi { .. }
        )
    }

    /// True when the rule draws from the random generator.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            SelectionRule::Randomized | SelectionRule::Grk | SelectionRule::Grmk | SelectionRule::GrmkRelaxed { .. }
        )
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionRule::Randomized => write!(f, "rk"),
            SelectionRule::MaxResidual => write!(f, "mr"),
            SelectionRule::MaxDistance => write!(f, "md"),
            SelectionRule::Grk => write!(f, "grk"),
            SelectionRule::Grmk => write!(f, "grmk"),
            SelectionRule::GrmkRelaxed { theta } => write!(f, "grmk-theta={theta}"),
            SelectionRule::GreedyKaczmarz => write!(f, "gk"),
            SelectionRule::Gbk { eta } => write!(f, "gbk-eta={eta}"),
            SelectionRule::Gdbk => write!(f, "gdbk"),
            SelectionRule::Gmbk => write!(f, "gmbk"),
            SelectionRule::GmbkXi { xi } => write!(f, "gmbk-xi={xi}"),
            SelectionRule::AveragedBlock => write!(f, "avg-block"),
        }
    }
}

impl FromStr for SelectionRule {
    type Err = KaczError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |prefix: &str| -> Result<f64> {
            s[prefix.len()..]
                .parse::<f64>()
                .map_err(|e| KaczError::InvalidParameter(format!("{s}: {e}")))
        };
        match s {
            "rk" => Ok(SelectionRule::Randomized),
            "mr" => Ok(SelectionRule::MaxResidual),
            "md" => Ok(SelectionRule::MaxDistance),
            "grk" => Ok(SelectionRule::Grk),
            "grmk" => Ok(SelectionRule::Grmk),
            "gk" => Ok(SelectionRule::GreedyKaczmarz),
            "gdbk" => Ok(SelectionRule::Gdbk),
            "gmbk" => Ok(SelectionRule::Gmbk),
            "avg-block" => Ok(SelectionRule::AveragedBlock),
            _ if s.starts_with("grmk-theta=") => SelectionRule::grmk_relaxed(param("grmk-theta=")?),
            _ if s.starts_with("gbk-eta=") => SelectionRule::gbk(param("gbk-eta=")?),
            _ if s.starts_with("gmbk-xi=") => SelectionRule::gmbk_xi(param("gmbk-xi=")?),
            _ => Err(KaczError::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

fn max_sq(r: &[f64]) -> f64 {
    r.iter().fold(0.0_f64, |m, v| m.max(v * v))
}

/// `(max_i f(rᵢ, nᵢ).0, Σ_i f(rᵢ, nᵢ).1)` with four interleaved accumulators,
/// so the running max and sum do not form one long dependency chain.
/// The summation order is fixed, so results are deterministic.
#[inline]
fn max_and_sum(r: &[f64], norms: &[f64], f: impl Fn(f64, f64) -> (f64, f64)) -> (f64, f64) {
    let mut max = [0.0_f64; 4];
    let mut sum = [0.0_f64; 4];
    let rc = r.chunks_exact(4);
    let nc = norms.chunks_exact(4);
    let (r_tail, n_tail) = (rc.remainder(), nc.remainder());
    for (rq, nq) in rc.zip(nc) {
        for l in 0..4 {
            let (m, t) = f(rq[l], nq[l]);
            max[l] = if m > max[l] { m } else { max[l] };
            sum[l] += t;
        }
    }
    for (l, (&ri, &ni)) in r_tail.iter().zip(n_tail).enumerate() {
        let (m, t) = f(ri, ni);
        max[l] = if m > max[l] { m } else { max[l] };
        sum[l] += t;
    }
    (
        max[0].max(max[1]).max(max[2].max(max[3])),
        (sum[0] + sum[1]) + (sum[2] + sum[3]),
    )
}

#[inline]
fn admits(value: f64, threshold: f64) -> bool {
    value > 0.0 && value >= threshold * (1.0 - MEMBERSHIP_GUARD)
}

/// `δ = θ·max|rᵢ|² + (1−θ)·Σ (‖A⁽ⁱ⁾‖²/‖A‖_F²)|rᵢ|²`; `θ = 1/2` is the GRMK threshold.
pub fn grmk_threshold(r: &[f64], a: &RowMatrix, theta: f64) -> Option<f64> {
    assert_eq!(r.len(), a.nrows(), "grmk_threshold: residual length");
    debug_assert!((0.0..=1.0).contains(&theta));
    let (max, weighted) = max_and_sum(r, a.row_sq_norms(), |ri, ni| {
        let s = ri * ri;
        (s, ni * s)
    });
    if max == 0.0 {
        return None;
    }
    Some(theta * max + (1.0 - theta) * weighted / a.frob_sq())
}

/// `I = {i : |rᵢ|² ≥ δ}`, excluding rows with zero residual.
pub fn grmk_set(r: &[f64], delta: f64) -> IndexSet {
    let indices = r
        .iter()
        .enumerate()
        .filter(|(_, ri)| admits(*ri * *ri, delta))
        .map(|(i, _)| i)
        .collect();
    IndexSet::new(indices, delta)
}

/// `ε = ½(max |rᵢ|²/‖A⁽ⁱ⁾‖² + ‖r‖²/‖A‖_F²)`.
pub fn grk_threshold(r: &[f64], a: &RowMatrix) -> Option<f64> {
    assert_eq!(r.len(), a.nrows(), "grk_threshold: residual length");
    let (max, total) = max_and_sum(r, a.row_sq_norms(), |ri, ni| {
        let s = ri * ri;
        (s / ni, s)
    });
    if max == 0.0 {
        return None;
    }
    Some(0.5 * (max + total / a.frob_sq()))
}

/// `U = {i : |rᵢ|²/‖A⁽ⁱ⁾‖² ≥ ε}`, excluding rows with zero residual.
/// Membership is tested as `|rᵢ|² ≥ ε·‖A⁽ⁱ⁾‖²`.
pub fn grk_set(r: &[f64], a: &RowMatrix, eps: f64) -> IndexSet {
    let indices = r
        .iter()
        .zip(a.row_sq_norms())
        .enumerate()
        .filter(|(_, (ri, ni))| admits(*ri * *ri, eps * *ni))
        .map(|(i, _)| i)
        .collect();
    IndexSet::new(indices, eps)
}

/// `ε = η·max |rᵢ|²/‖A⁽ⁱ⁾‖²`.
pub fn gbk_threshold(r: &[f64], a: &RowMatrix, eta: f64) -> Option<f64> {
    assert_eq!(r.len(), a.nrows(), "gbk_threshold: residual length");
    let max = r
        .iter()
        .zip(a.row_sq_norms())
        .fold(0.0_f64, |m, (ri, ni)| m.max(ri * ri / ni));
    (max > 0.0).then_some(eta * max)
}

/// `δ = ξ·max |rᵢ|²`.
pub fn gmbk_xi_threshold(r: &[f64], xi: f64) -> Option<f64> {
    let max = max_sq(r);
    (max > 0.0).then_some(xi * max)
}

/// Index of the largest `|rᵢ|²`, smallest index on ties.
pub fn argmax_residual(r: &[f64]) -> usize {
    argmax(r.iter().map(|v| v * v))
}

/// Index of the largest `|rᵢ|²/‖A⁽ⁱ⁾‖²`, smallest index on ties.
pub fn argmax_distance(r: &[f64], a: &RowMatrix) -> usize {
    argmax(r.iter().zip(a.row_sq_norms()).map(|(ri, ni)| ri * ri / ni))
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Draws an element of `idx` with probability proportional to its weight.
fn sample_weighted<R: Rng + ?Sized>(idx: &[usize], weight: impl Fn(usize) -> f64, rng: &mut R) -> usize {
    assert!(!idx.is_empty(), "sampling from an empty index set");
    if idx.len() == 1 {
        return idx[0];
    }
    let total: f64 = idx.iter().map(|&i| weight(i)).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for &i in idx {
        acc += weight(i);
        if target < acc {
            return i;
        }
    }
    // rounding in the running sum can leave target ≥ acc
    *idx.iter().rev().find(|&&i| weight(i) > 0.0).unwrap_or(&idx[idx.len() - 1])
}

/// GRMK sampling: `i ∈ idx` with probability proportional to `|rᵢ|²/‖A⁽ⁱ⁾‖²`.
pub fn sample_grmk<R: Rng + ?Sized>(idx: &IndexSet, r: &[f64], a: &RowMatrix, rng: &mut R) -> usize {
    let norms = a.row_sq_norms();
    sample_weighted(idx.indices(), |i| r[i] * r[i] / norms[i], rng)
}

/// GRK sampling: `i ∈ idx` with probability proportional to `|rᵢ|²`.
pub fn sample_grk<R: Rng + ?Sized>(idx: &IndexSet, r: &[f64], rng: &mut R) -> usize {
    sample_weighted(idx.indices(), |i| r[i] * r[i], rng)
}
