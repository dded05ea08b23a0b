//! Row-action solvers for consistent linear systems `Ax = b`.
//!
//! The crate implements greedy Kaczmarz-type methods built on two greedy
//! selection rules:
//!
//! - the maximum residual (Motzkin) rule, giving the greedy randomized
//!   Motzkin-Kaczmarz method (GRMK) and its block version (GMBK);
//! - the maximum distance rule, giving the greedy randomized Kaczmarz
//!   method (GRK) and the greedy (distance) block Kaczmarz methods (GBK, GDBK);
//!
//! together with classical baselines (randomized Kaczmarz, Motzkin, maximum
//! distance), an averaged-projection block update, convergence-factor bounds,
//! empirical convergence rates, and problem generators.
//!
//! # Module Structure
//!
//! - [`linalg`] - row-oriented matrix storage, kernels and dense oracles
//! - [`selection`] - greedy thresholds, index sets and sampling rules
//! - [`solvers`] - single-row and block solvers plus the [`solvers::solve`] driver
//! - [`analysis`] - convergence factors, empirical rates and run metrics
//! - [`problems`] - random problem generators and Matrix Market ingestion

pub mod analysis;
mod error;
pub mod linalg;
pub mod problems;
pub mod selection;
pub mod solvers;

pub use error::{KaczError, Result};
pub use linalg::{DenseVector, RowMatrix};
pub use selection::{IndexSet, SelectionRule};
pub use solvers::{solve, IterState, Metric, SolveReport, SolveStatus, StepRecord, StopCriteria};
