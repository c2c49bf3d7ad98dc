//! Lasso and weighted group-Lasso solvers.
//!
//! The estimator is
//!
//! ```text
//! beta_hat(lambda) = argmin_beta  1/(2n) ||y - X beta||^2 + lambda * sum_j sqrt(m_j) ||beta_{G_j}||_2
//! ```
//!
//! where `G_1..G_d` is a [`Grouping`](crate::Grouping) and `m_j = |G_j|`.
//! Singleton groups give the Lasso.
//!
//! Every solve terminates on the KKT residual computed by [`kkt_check`], so a
//! solution flagged `converged` is certified optimal to the configured
//! tolerance whatever algorithm produced it.

mod anderson;
mod group_lasso;
mod kkt;
mod lasso;
mod linalg;
mod path;
mod penalty;

use serde::{Deserialize, Serialize};

use crate::error::{MugError, Result};

pub use group_lasso::solve_group_lasso;
pub use kkt::{compute_lambda_max, kkt_check};
pub use lasso::solve_lasso;
pub use path::{
    choose_grid_index, geometric_grid, path_union_support, select_support_of_size, solve_lasso_path, solve_path,
    solve_path_on_grid, solve_path_to_target, PathResult, PathSolver, Selection,
};
pub use penalty::group_penalty;

/// Algorithm used for group-Lasso fits. The Lasso always uses cyclic
/// coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Proximal block coordinate descent with per-block step sizes.
    #[default]
    BlockCoordinate,
    /// Proximal gradient with block soft-thresholding (ISTA).
    ProximalGradient,
    /// ISTA with Nesterov momentum (FISTA).
    AcceleratedProximalGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// KKT residual threshold.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of points `C` on the regularization path.
    pub grid_size: usize,
    /// Smallest path value as a fraction of `lambda_max`.
    pub lambda_min_ratio: f64,
    pub algorithm: Algorithm,
    /// Record the objective after every iteration (diagnostics only).
    pub trace_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-7,
            max_iterations: 50_000,
            grid_size: 100,
            lambda_min_ratio: 1e-3,
            algorithm: Algorithm::BlockCoordinate,
            trace_objective: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(MugError::config("solver.tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(MugError::config("solver.max_iterations", "must be at least 1"));
        }
        if self.grid_size < 2 {
            return Err(MugError::config("solver.grid_size", "must be at least 2"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(MugError::config("solver.lambda_min_ratio", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// One fitted point.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSolution {
    pub beta_hat: Vec<f64>,
    pub lambda: f64,
    /// Objective value at `beta_hat`, recomputed from scratch.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Indices of groups with a nonzero block, in grouping order.
    pub active_groups: Vec<usize>,
    /// Objective after each iteration when tracing is enabled.
    pub objective_trace: Vec<f64>,
}

impl SolverSolution {
    pub fn group_support_size(&self) -> usize {
        self.active_groups.len()
    }
}
