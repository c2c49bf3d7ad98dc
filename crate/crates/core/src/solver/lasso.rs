//! Cyclic coordinate descent for the Lasso.

use crate::error::{MugError, Result};
use crate::problem::DesignProblem;

use crate::partition::Grouping;

use super::anderson::Anderson;
use super::group_lasso::{solve_group_lasso, BCD_SHARE};
use super::linalg::{axpy, col, correlations, dot, residual};
use super::{Algorithm, SolverConfig, SolverSolution};

/// Solves `1/(2n) ||y - X beta||^2 + lambda ||beta||_1` by cyclic coordinate
/// descent with exact coordinate minimization.
///
/// Full sweeps alternate with sweeps over the current nonzeros; the KKT
/// residual is checked after every full sweep on a freshly computed residual.
pub fn solve_lasso(
    problem: &DesignProblem,
    lambda: f64,
    config: &SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<SolverSolution> {
    let (n, p) = (problem.n(), problem.p());
    check_inputs(p, lambda, warm_start)?;
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..p).map(|j| dot(col(problem, j), col(problem, j)) / nf).collect();

    let mut beta = warm_start.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut r = residual(problem, &beta);
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut kkt;
    let mut accel = Anderson::new();
    let cap = (config.max_iterations / BCD_SHARE).max(1);

    let update = |j: usize, beta: &mut [f64], r: &mut [f64]| -> f64 {
        if col_sq[j] == 0.0 {
            return 0.0;
        }
        let xj = col(problem, j);
        let z = dot(xj, r) / nf + col_sq[j] * beta[j];
        let new = soft_threshold(z, lambda) / col_sq[j];
        let delta = new - beta[j];
        if delta != 0.0 {
            axpy(-delta, xj, r);
            beta[j] = new;
        }
        col_sq[j] * delta.abs()
    };

    loop {
        for j in 0..p {
            update(j, &mut beta, &mut r);
        }
        iterations += 1;
        if config.trace_objective {
            trace.push(objective(&r, &beta, lambda, nf));
        }

        r = residual(problem, &beta);
        kkt = lasso_kkt(&correlations(problem, &r), &beta, lambda);
        if kkt <= config.tolerance {
            converged = true;
            break;
        }
        if iterations >= cap {
            break;
        }

        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        accel.reset();
        while iterations < cap && !active.is_empty() {
            let mut biggest: f64 = 0.0;
            for &j in &active {
                biggest = biggest.max(update(j, &mut beta, &mut r));
            }
            iterations += 1;
            if let Some(extra) = accel.push(active.iter().map(|&j| beta[j]).collect()) {
                let mut candidate = beta.clone();
                for (&j, v) in active.iter().zip(extra) {
                    candidate[j] = v;
                }
                let r_candidate = residual(problem, &candidate);
                if objective(&r_candidate, &candidate, lambda, nf) < objective(&r, &beta, lambda, nf) {
                    beta = candidate;
                    r = r_candidate;
                }
            }
            if config.trace_objective {
                trace.push(objective(&r, &beta, lambda, nf));
            }
            if biggest <= 0.1 * config.tolerance {
                break;
            }
        }
    }

    if !converged && iterations < config.max_iterations {
        // Rank-deficient active sets stall coordinate descent; finish with FISTA.
        let rest = SolverConfig {
            max_iterations: config.max_iterations - iterations,
            algorithm: Algorithm::AcceleratedProximalGradient,
            ..config.clone()
        };
        let singletons = Grouping::singletons(p);
        let mut sol = solve_group_lasso(problem, &singletons, lambda, &rest, Some(&beta))?;
        sol.iterations += iterations;
        trace.append(&mut sol.objective_trace);
        sol.objective_trace = trace;
        return Ok(sol);
    }

    let r = residual(problem, &beta);
    let kkt_residual = lasso_kkt(&correlations(problem, &r), &beta, lambda);
    Ok(SolverSolution {
        objective: objective(&r, &beta, lambda, nf),
        active_groups: (0..p).filter(|&j| beta[j] != 0.0).collect(),
        beta_hat: beta,
        lambda,
        kkt_residual,
        iterations,
        converged: converged && kkt_residual <= config.tolerance,
        objective_trace: trace,
    })
}

pub(crate) fn check_inputs(p: usize, lambda: f64, warm_start: Option<&[f64]>) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(MugError::config("lambda", format!("must be finite and nonnegative, got {lambda}")));
    }
    if let Some(w) = warm_start {
        if w.len() != p {
            return Err(MugError::DimensionMismatch {
                what: "warm start length",
                expected: p,
                found: w.len(),
            });
        }
    }
    Ok(())
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn objective(r: &[f64], beta: &[f64], lambda: f64, n: f64) -> f64 {
    dot(r, r) / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

fn lasso_kkt(corr: &[f64], beta: &[f64], lambda: f64) -> f64 {
    corr.iter()
        .zip(beta)
        .map(|(&c, &b)| {
            if b == 0.0 {
                (c.abs() - lambda).max(0.0)
            } else {
                (c - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
