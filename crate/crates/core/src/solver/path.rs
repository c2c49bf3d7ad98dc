//! Regularization paths and the cardinality-targeting choice of `lambda`.

use crate::error::{MugError, Result};
use crate::partition::{group_support_to_variables, Grouping};
use crate::problem::DesignProblem;
use crate::support::SupportSet;

use super::group_lasso::GroupLassoSolver;
use super::kkt::compute_lambda_max;
use super::lasso::solve_lasso;
use super::{SolverConfig, SolverSolution};

/// Which estimator to run along a path.
#[derive(Debug, Clone, Copy)]
pub enum PathSolver<'g> {
    /// Coordinate-descent Lasso (singleton groups).
    Lasso,
    GroupLasso(&'g Grouping),
}

/// Solutions along a decreasing grid of `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub solutions: Vec<SolverSolution>,
    pub group_support_sizes: Vec<usize>,
    /// Number of times a group leaves the active set between consecutive grid
    /// points. Zero means the supports are nested along the grid.
    pub nesting_violations: usize,
    /// True when the solve stopped at the first point reaching a target size.
    pub stopped_early: bool,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn non_converged(&self) -> usize {
        self.solutions.iter().filter(|s| !s.converged).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.solutions.is_empty() && self.non_converged() == self.solutions.len()
    }
}

/// `grid_size` points from `lambda_max` down to `lambda_max * lambda_min_ratio`,
/// evenly spaced on a log scale. A zero `lambda_max` gives the single point 0.
pub fn geometric_grid(lambda_max: f64, config: &SolverConfig) -> Vec<f64> {
    if lambda_max <= 0.0 {
        return vec![0.0];
    }
    let c = config.grid_size;
    let log_ratio = config.lambda_min_ratio.ln();
    (0..c)
        .map(|k| {
            if k == 0 {
                lambda_max
            } else {
                lambda_max * (log_ratio * k as f64 / (c - 1) as f64).exp()
            }
        })
        .collect()
}

/// Group-Lasso path over the full default grid.
pub fn solve_path(problem: &DesignProblem, grouping: &Grouping, config: &SolverConfig) -> Result<PathResult> {
    let grid = geometric_grid(compute_lambda_max(problem, grouping), config);
    solve_path_on_grid(problem, PathSolver::GroupLasso(grouping), config, &grid, None)
}

/// Lasso path over the full default grid.
pub fn solve_lasso_path(problem: &DesignProblem, config: &SolverConfig) -> Result<PathResult> {
    let grid = geometric_grid(compute_lambda_max(problem, &Grouping::singletons(problem.p())), config);
    solve_path_on_grid(problem, PathSolver::Lasso, config, &grid, None)
}

/// Default grid, stopping at the first point whose group support reaches
/// `target`.
///
/// When at most `target` groups can ever be active (the group Lasso selects at
/// most `min(n, d)` groups, so this holds for `target = n`), the first point
/// reaching the target is exactly the one [`select_support_of_size`] would
/// pick from the full path, and the expensive small-`lambda` tail is skipped.
pub fn solve_path_to_target(
    problem: &DesignProblem,
    solver: PathSolver<'_>,
    config: &SolverConfig,
    target: usize,
) -> Result<PathResult> {
    let grouping_for_max;
    let grouping = match solver {
        PathSolver::Lasso => {
            grouping_for_max = Grouping::singletons(problem.p());
            &grouping_for_max
        }
        PathSolver::GroupLasso(g) => g,
    };
    let grid = geometric_grid(compute_lambda_max(problem, grouping), config);
    solve_path_on_grid(problem, solver, config, &grid, Some(target))
}

/// Warm-started solves over an explicit, strictly decreasing grid.
pub fn solve_path_on_grid(
    problem: &DesignProblem,
    solver: PathSolver<'_>,
    config: &SolverConfig,
    lambdas: &[f64],
    stop_at: Option<usize>,
) -> Result<PathResult> {
    config.validate()?;
    if lambdas.is_empty() {
        return Err(MugError::EmptyInput("lambda grid"));
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(MugError::config("lambda grid", "must be strictly decreasing"));
    }
    let group_solver = match solver {
        PathSolver::Lasso => None,
        PathSolver::GroupLasso(g) => Some(GroupLassoSolver::new(problem, g, config.algorithm)?),
    };

    let mut solutions: Vec<SolverSolution> = Vec::with_capacity(lambdas.len());
    let mut sizes = Vec::with_capacity(lambdas.len());
    let mut stopped_early = false;
    for &lambda in lambdas {
        let warm = solutions.last().map(|s| s.beta_hat.as_slice());
        let solution = match &group_solver {
            None => solve_lasso(problem, lambda, config, warm)?,
            Some(gs) => gs.solve(lambda, config, warm)?,
        };
        if !solution.converged {
            log::debug!(
                "path point lambda = {lambda:.3e} did not converge (kkt {:.2e} after {} iterations)",
                solution.kkt_residual,
                solution.iterations
            );
        }
        sizes.push(solution.group_support_size());
        solutions.push(solution);
        if let Some(target) = stop_at {
            if *sizes.last().unwrap() >= target {
                stopped_early = solutions.len() < lambdas.len();
                break;
            }
        }
    }

    let nesting_violations = count_nesting_violations(&solutions);
    if nesting_violations > 0 {
        log::debug!("supports along the path are not nested ({nesting_violations} drop events)");
    }
    Ok(PathResult {
        lambdas: lambdas[..solutions.len()].to_vec(),
        solutions,
        group_support_sizes: sizes,
        nesting_violations,
        stopped_early,
    })
}

fn count_nesting_violations(solutions: &[SolverSolution]) -> usize {
    solutions
        .windows(2)
        .map(|w| {
            let later = &w[1].active_groups;
            w[0].active_groups
                .iter()
                .filter(|g| later.binary_search(g).is_err())
                .count()
        })
        .sum()
}

/// The grid point chosen by the cardinality rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub lambda: f64,
    pub selected_groups: Vec<usize>,
    /// Variables of the selected groups.
    pub support: SupportSet,
}

/// Index of the grid point with the smallest support size at or above
/// `target`; if no point reaches `target`, the point of largest support.
/// Ties go to the earlier point, i.e. the larger `lambda`.
pub fn choose_grid_index(sizes: &[usize], target: usize) -> Option<usize> {
    let reaching = sizes
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= target)
        .min_by_key(|(k, &s)| (s, *k))
        .map(|(k, _)| k);
    reaching.or_else(|| {
        sizes
            .iter()
            .enumerate()
            .max_by_key(|(k, &s)| (s, std::cmp::Reverse(*k)))
            .map(|(k, _)| k)
    })
}

/// Applies [`choose_grid_index`] to a path and expands the chosen groups.
pub fn select_support_of_size(path: &PathResult, grouping: &Grouping, target: usize) -> Result<Selection> {
    let index = choose_grid_index(&path.group_support_sizes, target).ok_or(MugError::EmptyInput("path"))?;
    let chosen = &path.solutions[index];
    Ok(Selection {
        index,
        lambda: path.lambdas[index],
        selected_groups: chosen.active_groups.clone(),
        support: group_support_to_variables(grouping, &chosen.active_groups)?,
    })
}

/// Variables of every group active at some grid point up to and including
/// `index`. Equals the support at `index` when the path is nested.
pub fn path_union_support(path: &PathResult, grouping: &Grouping, index: usize) -> Result<SupportSet> {
    if index >= path.len() {
        return Err(MugError::config("path index", format!("{index} out of range for {} points", path.len())));
    }
    let mut seen = vec![false; grouping.d()];
    for s in &path.solutions[..=index] {
        for &g in &s.active_groups {
            seen[g] = true;
        }
    }
    let groups: Vec<usize> = (0..grouping.d()).filter(|&g| seen[g]).collect();
    group_support_to_variables(grouping, &groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn exact_hit() {
        assert_eq!(choose_grid_index(&[0, 2, 5, 9, 12], 9), Some(3));
    }

    #[test]
    fn fallback_to_largest() {
        assert_eq!(choose_grid_index(&[0, 2, 5, 8], 9), Some(3));
        assert_eq!(choose_grid_index(&[0, 8, 8, 3], 9), Some(1));
    }

    #[test]
    fn tie_prefers_larger_lambda() {
        assert_eq!(choose_grid_index(&[0, 10, 10], 9), Some(1));
        assert_eq!(choose_grid_index(&[0, 12, 10, 10, 11], 9), Some(2));
        assert_eq!(choose_grid_index(&[], 1), None);
    }

    #[test]
    fn union_of_supports_along_a_path() {
        let sol = |active: Vec<usize>| SolverSolution {
            beta_hat: vec![],
            lambda: 0.0,
            objective: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
            converged: true,
            active_groups: active,
            objective_trace: vec![],
        };
        let path = PathResult {
            lambdas: vec![3.0, 2.0, 1.0],
            solutions: vec![sol(vec![]), sol(vec![0, 2]), sol(vec![2, 3])],
            group_support_sizes: vec![0, 2, 2],
            nesting_violations: 1,
            stopped_early: false,
        };
        let g = Grouping::new(vec![vec![0, 1], vec![2], vec![3], vec![4, 5]], 6, 2).unwrap();
        assert_eq!(path_union_support(&path, &g, 2).unwrap().indices(), &[0, 1, 3, 4, 5]);
        assert_eq!(path_union_support(&path, &g, 1).unwrap().indices(), &[0, 1, 3]);
        assert!(path_union_support(&path, &g, 3).is_err());
    }

    #[test]
    fn grid_shape() {
        let cfg = SolverConfig::default();
        let g = geometric_grid(2.0, &cfg);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 2.0);
        assert!((g[99] - 2e-3).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(geometric_grid(0.0, &cfg), vec![0.0]);
    }

    fn small_problem() -> DesignProblem {
        let x = array![
            [0.3, -1.2, 0.7, 2.0, -0.1, 0.5],
            [1.1, 0.4, -0.9, 0.2, 0.8, -1.3],
            [-0.6, 1.5, 0.3, -1.0, 1.2, 0.4],
            [0.9, -0.2, 1.8, 0.5, -0.7, 0.1]
        ];
        let y = array![1.0, -0.5, 0.25, 2.0];
        crate::problem::normalize_columns(&DesignProblem::new(x, y).unwrap()).unwrap().0
    }

    #[test]
    fn path_starts_at_zero_and_respects_cardinality_bound() {
        let problem = small_problem();
        let grouping = Grouping::new(vec![vec![0, 1], vec![2, 3], vec![4, 5]], 6, 2).unwrap();
        let path = solve_path(&problem, &grouping, &SolverConfig::default()).unwrap();
        assert_eq!(path.len(), 100);
        assert_eq!(path.group_support_sizes[0], 0);
        assert!(path.group_support_sizes.iter().all(|&s| s <= 3));
        assert!(path.solutions.iter().all(|s| s.converged));
        let lasso = solve_lasso_path(&problem, &SolverConfig::default()).unwrap();
        assert!(lasso.group_support_sizes.iter().all(|&s| s <= 4));
    }

    #[test]
    fn early_stop_matches_full_path_choice() {
        let problem = small_problem();
        let full = solve_lasso_path(&problem, &SolverConfig::default()).unwrap();
        let short = solve_path_to_target(&problem, PathSolver::Lasso, &SolverConfig::default(), 2).unwrap();
        let singles = Grouping::singletons(6);
        let a = select_support_of_size(&full, &singles, 2).unwrap();
        let b = select_support_of_size(&short, &singles, 2).unwrap();
        assert_eq!(a.index, b.index);
        assert_eq!(a.support, b.support);
        assert!(short.stopped_early);
    }

    #[test]
    fn zero_observations_give_single_empty_point() {
        let problem = small_problem().with_y(Array1::zeros(4)).unwrap();
        let path = solve_lasso_path(&problem, &SolverConfig::default()).unwrap();
        assert_eq!(path.lambdas, vec![0.0]);
        assert_eq!(path.group_support_sizes, vec![0]);
    }

    #[test]
    fn rejects_increasing_grid() {
        let problem = small_problem();
        let err = solve_path_on_grid(&problem, PathSolver::Lasso, &SolverConfig::default(), &[0.1, 0.2], None);
        assert!(err.is_err());
    }
}
