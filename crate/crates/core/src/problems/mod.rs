//! Seeded test problems `Ax⋆ = b` and Matrix Market ingestion.
//!
//! Every generated system is consistent by construction: `b` is the product
//! `A·x⋆`, never perturbed. Generation is driven by a [`ChaCha8Rng`] seeded
//! from [`ProblemSpec::seed`], so equal [`ProblemSpec`]s give bitwise-identical output.

mod matrix_market;

use std::path::PathBuf;

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use matrix_market::{
    parse_matrix_market, read_matrix_market, read_matrix_market_filtered, write_matrix_market, MatrixMarketData,
};

use crate::linalg::RowMatrix;
use crate::{KaczError, Result};

/// Where the coefficient matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// i.i.d. `N(0, 1)` entries.
    GaussianDense { m: usize, n: usize },
    /// i.i.d. entries uniform in `(0, 1)`.
    UniformDense { m: usize, n: usize },
    /// Each entry present with probability `density`, values `N(0, 1)`.
    SparseNormal { m: usize, n: usize, density: f64 },
    /// Each entry present with probability `density`, values uniform in `(0, 1)`.
    SparseUniform { m: usize, n: usize, density: f64 },
    /// The `n × n` identity.
    Identity { n: usize },
    /// A Matrix Market file; empty rows are dropped.
    MatrixMarketFile(PathBuf),
}

/// How the exact solution is chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SolutionSpec {
    /// i.i.d. `N(0, 1)` entries, drawn after the matrix from the same stream.
    #[default]
    RandomNormal,
    Provided(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub source: MatrixSource,
    pub seed: u64,
    pub solution: SolutionSpec,
}

impl ProblemSpec {
    pub fn new(source: MatrixSource, seed: u64) -> Self {
        ProblemSpec {
            source,
            seed,
            solution: SolutionSpec::RandomNormal,
        }
    }

    pub fn with_solution(mut self, solution: SolutionSpec) -> Self {
        self.solution = solution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dims_ok = |m: usize, n: usize| {
            if m == 0 || n == 0 {
                Err(KaczError::InvalidParameter(format!("dimensions must be positive, got {m}x{n}")))
            } else {
                Ok(())
            }
        };
        match self.source {
            MatrixSource::GaussianDense { m, n } | MatrixSource::UniformDense { m, n } => dims_ok(m, n),
            MatrixSource::SparseNormal { m, n, density } | MatrixSource::SparseUniform { m, n, density } => {
                dims_ok(m, n)?;
                if !(density > 0.0 && density <= 1.0) {
                    return Err(KaczError::InvalidParameter(format!(
                        "density must lie in (0, 1], got {density}"
                    )));
                }
                Ok(())
            }
            MatrixSource::Identity { n } => dims_ok(n, n),
            MatrixSource::MatrixMarketFile(_) => Ok(()),
        }
    }
}

/// A consistent system with its generating solution.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: RowMatrix,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
    /// Original indices of empty rows removed from a Matrix Market source.
    pub dropped_rows: Vec<usize>,
}

/// Builds the problem described by `spec`.
pub fn generate(spec: &ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut dropped_rows = Vec::new();
    let a = match &spec.source {
        &MatrixSource::GaussianDense { m, n } => dense(m, n, &mut rng, StandardNormal)?,
        &MatrixSource::UniformDense { m, n } => dense(m, n, &mut rng, Open01)?,
        &MatrixSource::SparseNormal { m, n, density } => sparse(m, n, density, &mut rng, StandardNormal)?,
        &MatrixSource::SparseUniform { m, n, density } => sparse(m, n, density, &mut rng, Open01)?,
        &MatrixSource::Identity { n } => RowMatrix::identity(n)?,
        MatrixSource::MatrixMarketFile(path) => {
            let (a, dropped) = read_matrix_market_filtered(path)?;
            dropped_rows = dropped;
            a
        }
    };
    let x_star = match &spec.solution {
        SolutionSpec::RandomNormal => (0..a.ncols()).map(|_| rng.sample(StandardNormal)).collect(),
        SolutionSpec::Provided(x) => {
            if x.len() != a.ncols() {
                return Err(KaczError::InvalidParameter(format!(
                    "provided solution has length {}, matrix has {} columns",
                    x.len(),
                    a.ncols()
                )));
            }
            if let Some(index) = x.iter().position(|v| !v.is_finite()) {
                return Err(KaczError::NonFinite { index });
            }
            x.clone()
        }
    };
    let b = a.mul_vec(&x_star);
    Ok(Problem {
        a,
        b,
        x_star,
        dropped_rows,
    })
}

fn dense<D: Distribution<f64>>(m: usize, n: usize, rng: &mut ChaCha8Rng, dist: D) -> Result<RowMatrix> {
    let values: Vec<f64> = dist.sample_iter(&mut *rng).take(m * n).collect();
    RowMatrix::from_dense(m, n, values)
}

fn sparse<D: Distribution<f64>>(
    m: usize,
    n: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
    dist: D,
) -> Result<RowMatrix> {
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    for _ in 0..m {
        let start = cols.len();
        while cols.len() == start {
            for j in 0..n {
                if rng.random::<f64>() < density {
                    cols.push(j);
                    values.push(dist.sample(rng));
                }
            }
        }
        offsets.push(cols.len());
    }
    RowMatrix::from_csr(m, n, offsets, cols, values)
}
