//! Dense factorizations for spectral quantities and minimum-norm solves.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use super::{norm_sq, RowMatrix, EIGEN_CUTOFF, RANK_CUTOFF};
use crate::{KaczError, Result};

/// Householder QR with column pivoting, `M·P = Q·R`.
///
/// The rank is the number of leading diagonal entries of `R` above
/// [`RANK_CUTOFF`] times `|R₀₀|`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `R` in the upper triangle; the strict lower part is scratch.
    factors: DMatrix<f64>,
    reflectors: Vec<(Vec<f64>, f64)>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(mut m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let steps = rows.min(cols);
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut reflectors = Vec::with_capacity(steps);

        for k in 0..steps {
            // Partial column norms are recomputed rather than downdated.
            let (pivot, _) = (k..cols)
                .map(|j| (j, norm_sq(&m.as_slice()[j * rows + k..(j + 1) * rows])))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot != k {
                m.swap_columns(k, pivot);
                perm.swap(k, pivot);
            }

            let x = &m.as_slice()[k * rows + k..(k + 1) * rows];
            let norm = norm_sq(x).sqrt();
            if norm == 0.0 {
                reflectors.push((vec![0.0; rows - k], 0.0));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let beta = 2.0 / norm_sq(&v);

            for c in k..cols {
                let col = &mut m.as_mut_slice()[c * rows + k..(c + 1) * rows];
                let s = beta * v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>();
                for (cj, vj) in col.iter_mut().zip(&v) {
                    *cj -= s * vj;
                }
            }
            reflectors.push((v, beta));
        }

        let lead = if steps > 0 { m[(0, 0)].abs() } else { 0.0 };
        let rank = (0..steps)
            .take_while(|&k| lead > 0.0 && m[(k, k)].abs() > RANK_CUTOFF * lead)
            .count();

        PivotedQr {
            factors: m,
            reflectors,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column `j` of `M·P` is column `perm()[j]` of `M`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Entry `(i, j)` of `R` (zero below the diagonal).
    pub fn r(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.factors[(i, j)]
        }
    }

    /// y ← Q·y
    pub fn apply_q(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            reflect(&mut y[k..], v, *beta);
        }
    }

    /// y ← Qᵀ·y
    pub fn apply_qt(&self, y: &mut [f64]) {
        for (k, (v, beta)) in self.reflectors.iter().enumerate() {
            reflect(&mut y[k..], v, *beta);
        }
    }
}

fn reflect(y: &mut [f64], v: &[f64], beta: f64) {
    if beta == 0.0 {
        return;
    }
    let s = beta * v.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>();
    for (yj, vj) in y.iter_mut().zip(v) {
        *yj -= s * vj;
    }
}

/// Minimum-norm least-squares solution `z = A_idx†·rhs` of the row subsystem `A_idx z = rhs`.
///
/// Factors `A_idxᵀ·P = Q·R` with column pivoting. With `r` the numerical
/// rank, `A_idx = P·L·Q₁ᵀ` where `L = R₁ᵀ` (`|idx| × r`, full column rank),
/// so `A_idx† = Q₁·L†·Pᵀ`.
pub fn block_ls_apply(a: &RowMatrix, idx: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
    if idx.is_empty() {
        return Err(KaczError::contract("block_ls_apply: empty index set"));
    }
    if rhs.len() != idx.len() {
        return Err(KaczError::contract(format!(
            "block_ls_apply: rhs length {} does not match {} rows",
            rhs.len(),
            idx.len()
        )));
    }
    if let Some(&i) = idx.iter().find(|&&i| i >= a.nrows()) {
        return Err(KaczError::contract(format!("block_ls_apply: row {i} out of range")));
    }

    let n = a.ncols();
    if idx.len() == 1 {
        let mut z = vec![0.0; n];
        a.row(idx[0]).axpy_into(rhs[0] / a.row_sq_norm(idx[0]), &mut z);
        return Ok(z);
    }

    let qr = PivotedQr::new(a.rows_dense(idx).transpose());
    let p = idx.len();
    let rank = qr.rank();
    let c: Vec<f64> = qr.perm().iter().map(|&j| rhs[j]).collect();

    let y: Vec<f64> = if rank == p {
        // L is square lower triangular.
        let mut y = vec![0.0; p];
        for i in 0..p {
            let s: f64 = (0..i).map(|j| qr.r(j, i) * y[j]).sum();
            y[i] = (c[i] - s) / qr.r(i, i);
        }
        y
    } else {
        let l = DMatrix::from_fn(p, rank, |i, j| qr.r(j, i));
        let inner = l.qr();
        let qtc = inner.q().tr_mul(&DVector::from_column_slice(&c));
        let sol = inner
            .r()
            .solve_upper_triangular(&qtc)
            .ok_or_else(|| KaczError::contract("block_ls_apply: singular triangular factor"))?;
        sol.iter().copied().collect()
    };

    let mut z = vec![0.0; n];
    z[..rank].copy_from_slice(&y[..rank]);
    qr.apply_q(&mut z);
    Ok(z)
}

/// Smallest positive eigenvalue of `AᵀA`, skipping eigenvalues below
/// [`EIGEN_CUTOFF`]·λ_max. Dense; intended for `n` up to a few thousand.
pub fn lambda_min_pos(a: &RowMatrix) -> f64 {
    let eig = SymmetricEigen::new(a.gram());
    smallest_positive(eig.eigenvalues.as_slice())
}

fn smallest_positive(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
    eigenvalues
        .iter()
        .copied()
        .filter(|&v| v > EIGEN_CUTOFF * max)
        .fold(f64::INFINITY, f64::min)
}

/// `λ_max(A_idxᵀ·A_idx)`, computed from the small `|idx| × |idx|` Gram matrix `A_idx·A_idxᵀ`.
pub fn lambda_max_block(a: &RowMatrix, idx: &[usize]) -> f64 {
    if idx.len() == 1 {
        return a.row_sq_norm(idx[0]);
    }
    let rows = a.rows_dense(idx);
    let g = &rows * rows.transpose();
    SymmetricEigen::new(g)
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v))
}

/// Least-Euclidean-norm solution `x⋆ = A†b` via a dense SVD.
///
/// Fails with [`KaczError::Inconsistent`] when the relative residual of the
/// least-squares solution exceeds `1e-10`.
pub fn min_norm_solution(a: &RowMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(KaczError::contract(format!(
            "min_norm_solution: b has length {}, matrix has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    let b_norm = norm_sq(b).sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; a.ncols()]);
    }

    // Factor the tall orientation: nalgebra's SVD of wide matrices with many
    // zero singular values can lose accuracy in the singular vectors.
    let dense = a.to_dense();
    let wide = dense.nrows() < dense.ncols();
    let svd = SVD::new(if wide { dense.transpose() } else { dense }, true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let bv = DVector::from_column_slice(b);

    let mut x = DVector::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_CUTOFF * sigma_max {
            // A = U·Σ·Vᵀ (tall) or A = V·Σ·Uᵀ (wide)
            if wide {
                let coeff = v_t.row(k).transpose().dot(&bv) / s;
                x += u.column(k) * coeff;
            } else {
                let coeff = u.column(k).dot(&bv) / s;
                x += v_t.row(k).transpose() * coeff;
            }
        }
    }
    let x: Vec<f64> = x.iter().copied().collect();

    let res = norm_sq(&a.residual(b, &x)).sqrt();
    if res > 1e-10 * b_norm {
        return Err(KaczError::Inconsistent {
            relative_residual: res / b_norm,
        });
    }
    Ok(x)
}
