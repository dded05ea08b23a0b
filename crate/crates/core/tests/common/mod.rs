#![allow(dead_code)]

use kacz_core::problems::{generate, MatrixSource, Problem, ProblemSpec};
use nalgebra::DMatrix;

pub fn gaussian(m: usize, n: usize, seed: u64) -> Problem {
    generate(&ProblemSpec::new(MatrixSource::GaussianDense { m, n }, seed)).unwrap()
}

pub fn sparse_normal(m: usize, n: usize, density: f64, seed: u64) -> Problem {
    generate(&ProblemSpec::new(MatrixSource::SparseNormal { m, n, density }, seed)).unwrap()
}

pub fn err_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
}

/// Dense Moore-Penrose pseudoinverse through nalgebra's SVD, independent of the crate's solvers.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let tall = m.nrows() >= m.ncols();
    let work = if tall { m.clone() } else { m.transpose() };
    let smax = nalgebra::SVD::new(work.clone(), false, false).singular_values.max();
    let p = work.pseudo_inverse(1e-12 * smax).unwrap();
    if tall {
        p
    } else {
        p.transpose()
    }
}

pub fn dense_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}
