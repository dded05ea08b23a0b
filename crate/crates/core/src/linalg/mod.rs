//! Matrix and vector storage plus the kernels the solvers share.
//!
//! [`RowMatrix`] keeps either dense row-major values or CSR storage (with a
//! column-major mirror for fast `A·aᵢᵀ` products) and caches the squared
//! row norms and the squared Frobenius norm. The dense routines in
//! [`dense`] compute spectral quantities and minimum-norm solutions at desk
//! scale; they back the analysis layer, the block subsolver, and the test
//! oracles.

pub mod dense;
mod matrix;
mod vector;

pub use dense::{block_ls_apply, lambda_max_block, lambda_min_pos, min_norm_solution, PivotedQr};
pub use matrix::{Row, RowMatrix};
pub use vector::{dist_sq, dot, norm_inf, norm_sq, DenseVector, NeumaierSum};

/// Relative cutoff below which singular values (or pivoted-QR diagonals) count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Relative cutoff below which Gram eigenvalues count as zero.
pub const EIGEN_CUTOFF: f64 = 1e-10;
