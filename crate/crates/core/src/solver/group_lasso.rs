//! Weighted group-Lasso solvers.

use crate::error::{MugError, Result};
use crate::partition::Grouping;
use crate::problem::DesignProblem;

use super::anderson::Anderson;
use super::kkt::kkt_residual;
use super::lasso::check_inputs;
use super::linalg::{axpy, col, correlations, design_lipschitz, dot, largest_eigenvalue_psd, residual};
use super::penalty::group_penalty;
use super::{Algorithm, SolverConfig, SolverSolution};

/// Power-iteration steps for the global Lipschitz constant of ISTA/FISTA.
const POWER_STEPS: usize = 200;

/// Solves the weighted group Lasso at one `lambda`.
///
/// Returns the best iterate with `converged = false` if the iteration budget
/// runs out before the KKT residual reaches the tolerance.
pub fn solve_group_lasso(
    problem: &DesignProblem,
    grouping: &Grouping,
    lambda: f64,
    config: &SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<SolverSolution> {
    GroupLassoSolver::new(problem, grouping, config.algorithm)?.solve(lambda, config, warm_start)
}

/// Block coordinate descent gets `1/BCD_SHARE` of the iteration budget.
pub(super) const BCD_SHARE: usize = 5;

/// Per-(problem, grouping) precomputation shared by every point of a path.
pub(crate) struct GroupLassoSolver<'a> {
    problem: &'a DesignProblem,
    grouping: &'a Grouping,
    algorithm: Algorithm,
    /// Largest eigenvalue of `X_G^T X_G / n` per group (block coordinate).
    block_lipschitz: Vec<f64>,
    /// Largest eigenvalue of `X^T X / n` (proximal gradient).
    lipschitz: f64,
}

impl<'a> GroupLassoSolver<'a> {
    pub(crate) fn new(problem: &'a DesignProblem, grouping: &'a Grouping, algorithm: Algorithm) -> Result<Self> {
        if grouping.p() != problem.p() {
            return Err(MugError::DimensionMismatch {
                what: "grouping size",
                expected: problem.p(),
                found: grouping.p(),
            });
        }
        let nf = problem.n() as f64;
        let (block_lipschitz, lipschitz) = match algorithm {
            Algorithm::BlockCoordinate => {
                let mut gram = Vec::new();
                let blocks = grouping
                    .groups()
                    .iter()
                    .map(|members| {
                        let m = members.len();
                        gram.clear();
                        gram.resize(m * m, 0.0);
                        for a in 0..m {
                            for b in a..m {
                                let v = dot(col(problem, members[a]), col(problem, members[b])) / nf;
                                gram[a * m + b] = v;
                                gram[b * m + a] = v;
                            }
                        }
                        largest_eigenvalue_psd(&gram, m)
                    })
                    .collect();
                (blocks, 0.0)
            }
            _ => (Vec::new(), design_lipschitz(problem, POWER_STEPS)),
        };
        Ok(GroupLassoSolver {
            problem,
            grouping,
            algorithm,
            block_lipschitz,
            lipschitz,
        })
    }

    pub(crate) fn solve(&self, lambda: f64, config: &SolverConfig, warm_start: Option<&[f64]>) -> Result<SolverSolution> {
        let p = self.problem.p();
        check_inputs(p, lambda, warm_start)?;
        let mut beta = warm_start.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
        let mut trace = Vec::new();
        let (iterations, converged) = match self.algorithm {
            Algorithm::BlockCoordinate => {
                // Coordinate descent crawls when the active columns are rank
                // deficient; FISTA finishes such solves from the current iterate.
                let budget = SolverConfig {
                    max_iterations: (config.max_iterations / BCD_SHARE).max(1),
                    ..config.clone()
                };
                let (used, done) = self.block_coordinate(lambda, &budget, &mut beta, &mut trace);
                if done || used >= config.max_iterations {
                    (used, done)
                } else {
                    let rest = SolverConfig {
                        max_iterations: config.max_iterations - used,
                        ..config.clone()
                    };
                    let lip = design_lipschitz(self.problem, POWER_STEPS);
                    let (more, done) = self.proximal_gradient(lambda, &rest, lip, &mut beta, &mut trace, true);
                    (used + more, done)
                }
            }
            Algorithm::ProximalGradient => {
                self.proximal_gradient(lambda, config, self.lipschitz, &mut beta, &mut trace, false)
            }
            Algorithm::AcceleratedProximalGradient => {
                self.proximal_gradient(lambda, config, self.lipschitz, &mut beta, &mut trace, true)
            }
        };

        let r = residual(self.problem, &beta);
        let kkt = kkt_residual(&correlations(self.problem, &r), &beta, self.grouping, lambda);
        Ok(SolverSolution {
            objective: self.objective(&r, &beta, lambda),
            active_groups: active_groups(self.grouping, &beta),
            beta_hat: beta,
            lambda,
            kkt_residual: kkt,
            iterations,
            converged: converged && kkt <= config.tolerance,
            objective_trace: trace,
        })
    }

    fn objective(&self, r: &[f64], beta: &[f64], lambda: f64) -> f64 {
        dot(r, r) / (2.0 * self.problem.n() as f64) + lambda * group_penalty(beta, self.grouping)
    }

    /// One proximal block update; returns `L_G * ||delta||` as a change measure.
    fn update_block(&self, g: usize, lambda: f64, beta: &mut [f64], r: &mut [f64], v: &mut Vec<f64>) -> f64 {
        let lip = self.block_lipschitz[g];
        if lip == 0.0 {
            return 0.0;
        }
        let members = self.grouping.group(g);
        let nf = self.problem.n() as f64;
        v.clear();
        let mut norm_sq = 0.0;
        for &j in members {
            let vj = beta[j] + dot(col(self.problem, j), r) / (nf * lip);
            norm_sq += vj * vj;
            v.push(vj);
        }
        let norm = norm_sq.sqrt();
        let threshold = lambda * (members.len() as f64).sqrt() / lip;
        let shrink = if norm > threshold { 1.0 - threshold / norm } else { 0.0 };
        let mut change_sq = 0.0;
        for (k, &j) in members.iter().enumerate() {
            let new = shrink * v[k];
            let delta = new - beta[j];
            if delta != 0.0 {
                axpy(-delta, col(self.problem, j), r);
                beta[j] = new;
                change_sq += delta * delta;
            }
        }
        lip * change_sq.sqrt()
    }

    fn block_coordinate(
        &self,
        lambda: f64,
        config: &SolverConfig,
        beta: &mut [f64],
        trace: &mut Vec<f64>,
    ) -> (usize, bool) {
        let d = self.grouping.d();
        let mut r = residual(self.problem, beta);
        let mut scratch = Vec::with_capacity(self.grouping.largest_group());
        let mut iterations = 0;
        let mut accel = Anderson::new();
        loop {
            for g in 0..d {
                self.update_block(g, lambda, beta, &mut r, &mut scratch);
            }
            iterations += 1;
            if config.trace_objective {
                trace.push(self.objective(&r, beta, lambda));
            }

            r = residual(self.problem, beta);
            let kkt = kkt_residual(&correlations(self.problem, &r), beta, self.grouping, lambda);
            if kkt <= config.tolerance {
                return (iterations, true);
            }
            if iterations >= config.max_iterations {
                return (iterations, false);
            }

            let active = active_groups(self.grouping, beta);
            let coords: Vec<usize> = active.iter().flat_map(|&g| self.grouping.group(g).iter().copied()).collect();
            accel.reset();
            while iterations < config.max_iterations && !active.is_empty() {
                let mut biggest: f64 = 0.0;
                for &g in &active {
                    biggest = biggest.max(self.update_block(g, lambda, beta, &mut r, &mut scratch));
                }
                iterations += 1;
                if let Some(extra) = accel.push(coords.iter().map(|&j| beta[j]).collect()) {
                    let mut candidate = beta.to_vec();
                    for (&j, v) in coords.iter().zip(extra) {
                        candidate[j] = v;
                    }
                    let r_candidate = residual(self.problem, &candidate);
                    if self.objective(&r_candidate, &candidate, lambda) < self.objective(&r, beta, lambda) {
                        beta.copy_from_slice(&candidate);
                        r = r_candidate;
                    }
                }
                if config.trace_objective {
                    trace.push(self.objective(&r, beta, lambda));
                }
                if biggest <= 0.1 * config.tolerance {
                    break;
                }
            }
        }
    }

    /// ISTA, or FISTA with function-value restart when `accelerated`.
    /// The step size starts at `1/L` and is halved whenever the quadratic
    /// upper bound fails.
    fn proximal_gradient(
        &self,
        lambda: f64,
        config: &SolverConfig,
        lipschitz: f64,
        beta: &mut Vec<f64>,
        trace: &mut Vec<f64>,
        accelerated: bool,
    ) -> (usize, bool) {
        let problem = self.problem;
        let nf = problem.n() as f64;
        let mut lip = lipschitz.max(f64::MIN_POSITIVE);
        let smooth = |r: &[f64]| dot(r, r) / (2.0 * nf);

        let mut point = beta.clone(); // extrapolated point (== beta for ISTA)
        let mut momentum = 1.0f64;
        let mut r_beta = residual(problem, beta);
        let mut obj_beta = self.objective(&r_beta, beta, lambda);
        let mut iterations = 0;
        loop {
            let r_point = if accelerated { residual(problem, &point) } else { r_beta.clone() };
            let corr = correlations(problem, &r_point);
            if !accelerated || iterations % 10 == 0 {
                let corr_beta = if accelerated { correlations(problem, &r_beta) } else { corr.clone() };
                if kkt_residual(&corr_beta, beta, self.grouping, lambda) <= config.tolerance {
                    return (iterations, true);
                }
            }
            if iterations >= config.max_iterations {
                return (iterations, false);
            }

            let f_point = smooth(&r_point);
            let (candidate, r_candidate) = loop {
                let candidate = block_prox(&point, &corr, lip, lambda, self.grouping);
                let r_candidate = residual(problem, &candidate);
                let mut linear = 0.0;
                let mut quad = 0.0;
                for j in 0..candidate.len() {
                    let step = candidate[j] - point[j];
                    linear -= corr[j] * step;
                    quad += step * step;
                }
                if smooth(&r_candidate) <= f_point + linear + 0.5 * lip * quad + 1e-15 * f_point.abs() {
                    break (candidate, r_candidate);
                }
                lip *= 2.0;
            };
            iterations += 1;

            let obj_candidate = self.objective(&r_candidate, &candidate, lambda);
            if accelerated {
                if obj_candidate > obj_beta {
                    // Restart: drop momentum and retry from the last iterate.
                    momentum = 1.0;
                    point.clone_from(beta);
                    continue;
                }
                let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
                let w = (momentum - 1.0) / next;
                for j in 0..point.len() {
                    point[j] = candidate[j] + w * (candidate[j] - beta[j]);
                }
                momentum = next;
            }
            *beta = candidate;
            r_beta = r_candidate;
            obj_beta = obj_candidate;
            if !accelerated {
                point.clone_from(beta);
            }
            if config.trace_objective {
                trace.push(obj_beta);
            }
        }
    }
}

fn block_prox(point: &[f64], corr: &[f64], lip: f64, lambda: f64, grouping: &Grouping) -> Vec<f64> {
    let mut out = vec![0.0; point.len()];
    for members in grouping.groups() {
        let norm = members
            .iter()
            .map(|&j| {
                let v = point[j] + corr[j] / lip;
                v * v
            })
            .sum::<f64>()
            .sqrt();
        let threshold = lambda * (members.len() as f64).sqrt() / lip;
        if norm > threshold {
            let shrink = 1.0 - threshold / norm;
            for &j in members {
                out[j] = shrink * (point[j] + corr[j] / lip);
            }
        }
    }
    out
}

pub(crate) fn active_groups(grouping: &Grouping, beta: &[f64]) -> Vec<usize> {
    grouping
        .groups()
        .iter()
        .enumerate()
        .filter(|(_, members)| members.iter().any(|&j| beta[j] != 0.0))
        .map(|(g, _)| g)
        .collect()
}
