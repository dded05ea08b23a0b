//! One-row-per-iteration updates and the greedy row choices that feed them.

use rand::Rng;

use super::{IterState, LastChoice};
use crate::linalg::RowMatrix;
use crate::selection::{self, IndexSet};

/// Projects `x` onto the hyperplane `A⁽ⁱ⁾x = b⁽ⁱ⁾`:
/// `x ← x + rᵢ/‖A⁽ⁱ⁾‖²·(A⁽ⁱ⁾)ᵀ`, with the residual updated incrementally.
///
/// Panics if `i` is out of range.
pub fn kaczmarz_step(state: &mut IterState, a: &RowMatrix, i: usize) {
    let alpha = state.r[i] / a.row_sq_norm(i);
    if alpha != 0.0 {
        a.row(i).axpy_into(alpha, &mut state.x);
        a.residual_row_update(i, alpha, &mut state.r);
    }
    state.last = Some(LastChoice::Row(i));
}

/// GRMK choice (relaxed by `theta`): builds `I_k` from the residual threshold
/// and samples a member proportionally to its distance.
/// Returns `None` when the residual is zero.
pub fn grmk_choose<R: Rng + ?Sized>(
    r: &[f64],
    a: &RowMatrix,
    theta: f64,
    rng: &mut R,
) -> Option<(IndexSet, usize)> {
    let delta = selection::grmk_threshold(r, a, theta)?;
    let set = selection::grmk_set(r, delta);
    let i = selection::sample_grmk(&set, r, a, rng);
    Some((set, i))
}

/// GRK choice: builds `U_k` from the distance threshold and samples a member
/// proportionally to its squared residual.
pub fn grk_choose<R: Rng + ?Sized>(r: &[f64], a: &RowMatrix, rng: &mut R) -> Option<(IndexSet, usize)> {
    let eps = selection::grk_threshold(r, a)?;
    let set = selection::grk_set(r, a, eps);
    let i = selection::sample_grk(&set, r, rng);
    Some((set, i))
}

/// Greedy Kaczmarz choice: `θ = 1`, then the maximum-distance member of `I_k`.
pub fn greedy_kaczmarz_choose(r: &[f64], a: &RowMatrix) -> Option<(IndexSet, usize)> {
    let delta = selection::grmk_threshold(r, a, 1.0)?;
    let set = selection::grmk_set(r, delta);
    let norms = a.row_sq_norms();
    let mut best = (set.indices()[0], f64::NEG_INFINITY);
    for &i in set.indices() {
        let d = r[i] * r[i] / norms[i];
        if d > best.1 {
            best = (i, d);
        }
    }
    Some((set, best.0))
}

/// One GRMK iteration. Returns the working set and chosen row, or `None` if converged.
pub fn grmk_step<R: Rng + ?Sized>(state: &mut IterState, a: &RowMatrix, rng: &mut R) -> Option<(IndexSet, usize)> {
    let (set, i) = grmk_choose(&state.r, a, 0.5, rng)?;
    kaczmarz_step(state, a, i);
    Some((set, i))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn reference() -> (RowMatrix, Vec<f64>) {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        (a, vec![1.0, 2.0, 3.0])
    }

    #[test]
    fn kaczmarz_step_reference() {
        let (a, b) = reference();
        let mut s = IterState::new(&a, &b, &[0.0, 0.0]).unwrap();
        kaczmarz_step(&mut s, &a, 2);
        assert_eq!(s.x, vec![1.5, 1.5]);
        assert_eq!(s.r, vec![-0.5, 0.5, 0.0]);
        assert_eq!(s.last, Some(LastChoice::Row(2)));
    }

    #[test]
    fn zero_residual_row_is_noop() {
        let (a, b) = reference();
        let mut s = IterState::new(&a, &b, &[1.0, 2.0]).unwrap();
        let before = s.clone();
        kaczmarz_step(&mut s, &a, 1);
        assert_eq!(s.x, before.x);
        assert_eq!(s.r, before.r);
    }

    #[test]
    fn identity_row_projection() {
        let a = RowMatrix::identity(2).unwrap();
        let mut s = IterState::new(&a, &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        kaczmarz_step(&mut s, &a, 0);
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn grmk_first_step_is_forced_on_reference() {
        let (a, b) = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut s = IterState::new(&a, &b, &[0.0, 0.0]).unwrap();
            let (set, i) = grmk_step(&mut s, &a, &mut rng).unwrap();
            assert_eq!(set.indices(), &[2]);
            assert_eq!(i, 2);
            assert_eq!(s.x, vec![1.5, 1.5]);
        }
    }

    #[test]
    fn greedy_kaczmarz_picks_max_distance_in_set() {
        // rows with norms 1 and 4, equal residuals: both in I_k, row 0 is farther
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let (set, i) = greedy_kaczmarz_choose(&[2.0, 2.0], &a).unwrap();
        assert_eq!(set.indices(), &[0, 1]);
        assert_eq!(i, 0);
        assert!(greedy_kaczmarz_choose(&[0.0, 0.0], &a).is_none());
    }
}
