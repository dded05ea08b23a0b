//! Block updates: exact pseudoinverse projections onto a working set and the
//! averaged-projection alternative that avoids the pseudoinverse.

use super::single::kaczmarz_step;
use super::{IterState, LastChoice};
use crate::linalg::{block_ls_apply, RowMatrix};
use crate::selection::{self, IndexSet};
use crate::{KaczError, Result};

/// Weights `wᵢ` of the averaged block update.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum WeightScheme {
    /// `1/|τ|`
    Uniform,
    /// `‖A⁽ⁱ⁾‖²/‖A_τ‖_F²`; reduces to the exact projection when the rows of `τ` are orthogonal.
    #[default]
    NormProportional,
    /// Explicit positive weights in the order of the index set, summing to 1.
    Custom(Vec<f64>),
}

impl WeightScheme {
    pub fn weights(&self, a: &RowMatrix, idx: &IndexSet) -> Result<Vec<f64>> {
        let p = idx.len();
        match self {
            WeightScheme::Uniform => Ok(vec![1.0 / p as f64; p]),
            WeightScheme::NormProportional => {
                let total: f64 = idx.indices().iter().map(|&i| a.row_sq_norm(i)).sum();
                Ok(idx.indices().iter().map(|&i| a.row_sq_norm(i) / total).collect())
            }
            WeightScheme::Custom(w) => {
                if w.len() != p {
                    return Err(KaczError::contract(format!(
                        "{} custom weights for a set of {p} rows",
                        w.len()
                    )));
                }
                if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(KaczError::contract("custom weights must be positive"));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(KaczError::contract(format!("custom weights sum to {sum}, not 1")));
                }
                Ok(w.clone())
            }
        }
    }
}

/// `x ← x + A_τ†(b_τ − A_τx)`; singleton sets use the single-row projection.
pub fn block_project(state: &mut IterState, a: &RowMatrix, set: &IndexSet) -> Result<()> {
    match set.indices() {
        [] => return Err(KaczError::contract("block projection onto an empty set")),
        [i] => kaczmarz_step(state, a, *i),
        idx => {
            let rhs: Vec<f64> = idx.iter().map(|&i| state.r[i]).collect();
            let z = block_ls_apply(a, idx, &rhs)?;
            for (xj, zj) in state.x.iter_mut().zip(&z) {
                *xj += zj;
            }
            a.residual_sub_mul(&z, &mut state.r);
        }
    }
    state.last = Some(LastChoice::Set(set.clone()));
    Ok(())
}

/// One GMBK iteration: `I_k` from the `θ = 1/2` residual threshold, then a block projection.
/// Returns `None` when the residual is zero.
pub fn gmbk_step(state: &mut IterState, a: &RowMatrix) -> Result<Option<IndexSet>> {
    let Some(delta) = selection::grmk_threshold(&state.r, a, 0.5) else {
        return Ok(None);
    };
    let set = selection::grmk_set(&state.r, delta);
    block_project(state, a, &set)?;
    Ok(Some(set))
}

/// GMBK with `δ_k = ξ·max|rᵢ|²`.
pub fn gmbk_xi_step(state: &mut IterState, a: &RowMatrix, xi: f64) -> Result<Option<IndexSet>> {
    let Some(delta) = selection::gmbk_xi_threshold(&state.r, xi) else {
        return Ok(None);
    };
    let set = selection::grmk_set(&state.r, delta);
    block_project(state, a, &set)?;
    Ok(Some(set))
}

/// One GBK iteration with `ε_k = η·max |rᵢ|²/‖A⁽ⁱ⁾‖²`.
pub fn gbk_step(state: &mut IterState, a: &RowMatrix, eta: f64) -> Result<Option<IndexSet>> {
    let Some(eps) = selection::gbk_threshold(&state.r, a, eta) else {
        return Ok(None);
    };
    let set = selection::grk_set(&state.r, a, eps);
    block_project(state, a, &set)?;
    Ok(Some(set))
}

/// The per-step `η = ½ + ½·(‖r‖²/‖A‖_F²)/max dᵢ` that makes GBK's threshold equal GRK's `ε_k`.
pub fn gdbk_eta(r: &[f64], a: &RowMatrix) -> Option<f64> {
    let mut max = 0.0_f64;
    let mut total = 0.0;
    for (ri, ni) in r.iter().zip(a.row_sq_norms()) {
        max = max.max(ri * ri / ni);
        total += ri * ri;
    }
    (max > 0.0).then(|| 0.5 + 0.5 * (total / a.frob_sq()) / max)
}

/// One GDBK iteration: GBK with [`gdbk_eta`].
pub fn gdbk_step(state: &mut IterState, a: &RowMatrix) -> Result<Option<IndexSet>> {
    match gdbk_eta(&state.r, a) {
        Some(eta) => gbk_step(state, a, eta),
        None => Ok(None),
    }
}

/// Weighted average of the single-row projections over `idx`:
/// `x ← x + Σ wᵢ·rᵢ/‖A⁽ⁱ⁾‖²·(A⁽ⁱ⁾)ᵀ`.
pub fn averaged_block_step(state: &mut IterState, a: &RowMatrix, idx: &IndexSet, w: &WeightScheme) -> Result<()> {
    if idx.is_empty() {
        return Err(KaczError::contract("averaged step over an empty set"));
    }
    let weights = w.weights(a, idx)?;
    let mut z = vec![0.0; a.ncols()];
    for (&i, wi) in idx.indices().iter().zip(&weights) {
        let c = wi * state.r[i] / a.row_sq_norm(i);
        if c != 0.0 {
            a.row(i).axpy_into(c, &mut z);
        }
    }
    for (xj, zj) in state.x.iter_mut().zip(&z) {
        *xj += zj;
    }
    a.residual_sub_mul(&z, &mut state.r);
    state.last = Some(LastChoice::Set(idx.clone()));
    Ok(())
}
