//! Multiple-grouping screening and the baselines it is compared against.
//!
//! [`mug_screen`] is the tuning-free procedure: a Lasso fit whose `lambda` is
//! chosen so that `n` variables are selected gives the initial estimate, then
//! `K` group-Lasso fits over fresh groupings (each selecting `n` groups, or as
//! many as the path reaches) are intersected into it. Because the group Lasso
//! selects at most `min(n, d)` groups, no penalty level has to be tuned.
//!
//! [`MugScreener`] exposes the same procedure one iteration at a time, which
//! lets a sweep over `K` read every intermediate estimate from a single run.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MugError, Result};
use crate::grouping::{derive_trial_rng, GroupingKind, GroupingStrategy};
use crate::partition::Grouping;
use crate::problem::DesignProblem;
use crate::solver::{
    compute_lambda_max, geometric_grid, path_union_support, select_support_of_size, solve_path_on_grid, solve_path_to_target,
    PathResult, PathSolver, SolverConfig,
};
use crate::support::{intersect_supports, SupportSet};

/// Screening methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mug,
    Sis,
    Lcv,
    MugPlusLcv,
    LassoOnly,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mug, Method::Sis, Method::Lcv, Method::MugPlusLcv, Method::LassoOnly];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mug => "mug",
            Method::Sis => "sis",
            Method::Lcv => "lcv",
            Method::MugPlusLcv => "mug_plus_lcv",
            Method::LassoOnly => "lasso_only",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = MugError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MugError::config("method", format!("unknown method {s:?}")))
    }
}

/// Which variables a group-Lasso path contributes once its `lambda` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportRule {
    /// The support at the chosen `lambda`.
    AtLambda,
    /// Every variable active anywhere on the solved path, which runs from
    /// `lambda_max` to the first point reaching the target (or the end of the
    /// grid). Identical to `AtLambda` on nested paths, and keeps variables
    /// that enter the path and leave it again at smaller `lambda`.
    #[default]
    PathUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MugConfig {
    /// Number of groupings `K`.
    #[serde(rename = "k")]
    pub big_k: usize,
    /// Largest group size `m`.
    pub m_max: usize,
    pub strategy: GroupingKind,
    /// Applies to the group-Lasso iterations; the initial Lasso stage always
    /// uses the support at its chosen `lambda`.
    pub support_rule: SupportRule,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Default for MugConfig {
    fn default() -> Self {
        MugConfig {
            big_k: 50,
            m_max: 2,
            strategy: GroupingKind::Adaptive,
            support_rule: SupportRule::PathUnion,
            solver: SolverConfig::default(),
            seed: 0,
        }
    }
}

impl MugConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(MugError::config("mug.m_max", "must be at least 1"));
        }
        self.solver.validate()
    }
}

/// Output of one screening method.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningResult {
    pub method: Method,
    pub estimate: SupportSet,
    /// `|S|` after the initial fit and after each grouping (multiple grouping),
    /// or the single estimate size for other methods.
    pub per_iteration_sizes: Vec<usize>,
    pub lambdas_used: Vec<f64>,
    /// Path points that hit the iteration cap.
    pub non_converged_points: usize,
    /// Drop events along fitted paths (supports not nested in `lambda`).
    pub nesting_violations: usize,
    pub warnings: Vec<String>,
}

impl ScreeningResult {
    fn single(method: Method, estimate: SupportSet, lambdas_used: Vec<f64>) -> Self {
        ScreeningResult {
            method,
            per_iteration_sizes: vec![estimate.len()],
            estimate,
            lambdas_used,
            non_converged_points: 0,
            nesting_violations: 0,
            warnings: Vec::new(),
        }
    }
}

/// Largest group size `m <= m_max` with `ceil(p / m) > n`, so that random
/// groupings have more groups than observations. Returns `(m, adjusted)`.
pub fn effective_group_size(p: usize, n: usize, m_max: usize) -> (usize, bool) {
    let mut m = m_max.max(1);
    while m > 1 && p.div_ceil(m) <= n {
        m -= 1;
    }
    (m, m != m_max)
}

fn check_path(path: &PathResult, what: &str) -> Result<()> {
    if path.all_failed() {
        return Err(MugError::SolverFailure(format!("no point of the {what} path converged")));
    }
    Ok(())
}

/// Group-Lasso path to `target` groups, then the chosen `lambda` and the
/// support under `rule`.
fn group_lasso_support(
    problem: &DesignProblem,
    grouping: &Grouping,
    solver: &SolverConfig,
    target: usize,
    rule: SupportRule,
) -> Result<(PathResult, f64, SupportSet)> {
    let path = solve_path_to_target(problem, PathSolver::GroupLasso(grouping), solver, target)?;
    check_path(&path, "group Lasso")?;
    let chosen = select_support_of_size(&path, grouping, target)?;
    let support = match rule {
        SupportRule::AtLambda => chosen.support,
        SupportRule::PathUnion => path_union_support(&path, grouping, path.len() - 1)?,
    };
    Ok((path, chosen.lambda, support))
}

/// Incremental multiple-grouping screening.
pub struct MugScreener<'a> {
    problem: &'a DesignProblem,
    config: MugConfig,
    strategy: GroupingStrategy,
    estimate: SupportSet,
    result: ScreeningResult,
    iterations: usize,
}

/// Redraws allowed when a grouping has too few groups.
const MAX_REDRAWS: usize = 100;

impl<'a> MugScreener<'a> {
    /// Validates the inputs and runs the initial Lasso stage.
    pub fn new(problem: &'a DesignProblem, config: &MugConfig) -> Result<Self> {
        config.validate()?;
        problem.require_normalized()?;
        let (n, p) = (problem.n(), problem.p());
        let mut warnings = Vec::new();
        if p <= n {
            warnings.push(format!(
                "p = {p} <= n = {n}: the cardinality bound gives no reduction and groupings cannot have d > n"
            ));
        }
        let (m, adjusted) = effective_group_size(p, n, config.m_max);
        if adjusted && p > n {
            warnings.push(format!(
                "group size reduced from {} to {m} so that groupings have more than n = {n} groups",
                config.m_max
            ));
        }
        for w in &warnings {
            log::warn!("{w}");
        }

        let path = solve_path_to_target(problem, PathSolver::Lasso, &config.solver, n)?;
        check_path(&path, "Lasso")?;
        let chosen = select_support_of_size(&path, &Grouping::singletons(p), n)?;
        let estimate = chosen.support;
        let result = ScreeningResult {
            method: if config.big_k == 0 { Method::LassoOnly } else { Method::Mug },
            estimate: estimate.clone(),
            per_iteration_sizes: vec![estimate.len()],
            lambdas_used: vec![chosen.lambda],
            non_converged_points: path.non_converged(),
            nesting_violations: path.nesting_violations,
            warnings,
        };
        Ok(MugScreener {
            problem,
            strategy: GroupingStrategy {
                kind: config.strategy,
                m_max: m,
                seed: config.seed,
            },
            config: config.clone(),
            estimate,
            result,
            iterations: 0,
        })
    }

    pub fn estimate(&self) -> &SupportSet {
        &self.estimate
    }

    /// Number of groupings applied so far.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Group size actually used.
    pub fn group_size(&self) -> usize {
        self.strategy.m_max
    }

    /// The grouping for the next iteration.
    fn next_grouping(&self) -> Grouping {
        let (n, p) = (self.problem.n(), self.problem.p());
        let mut rng = derive_trial_rng(self.strategy.seed, 0, self.iterations as u64 + 1);
        let mut grouping = self.strategy.draw(p, &self.estimate, &mut rng);
        let mut draws = 1;
        while grouping.d() <= n && p > n && draws < MAX_REDRAWS {
            grouping = self.strategy.draw(p, &self.estimate, &mut rng);
            draws += 1;
        }
        grouping
    }

    /// Applies one more grouping and returns the updated estimate.
    pub fn step(&mut self) -> Result<&SupportSet> {
        let grouping = self.next_grouping();
        let n = self.problem.n();
        if grouping.d() <= n && self.problem.p() > n {
            log::warn!("grouping {} has d = {} <= n = {n}", self.iterations + 1, grouping.d());
        }
        let (path, lambda, support) =
            group_lasso_support(self.problem, &grouping, &self.config.solver, n, self.config.support_rule)?;
        self.estimate = self.estimate.intersect(&support);
        self.iterations += 1;
        self.result.per_iteration_sizes.push(self.estimate.len());
        self.result.lambdas_used.push(lambda);
        self.result.non_converged_points += path.non_converged();
        self.result.nesting_violations += path.nesting_violations;
        Ok(&self.estimate)
    }

    pub fn into_result(mut self) -> ScreeningResult {
        self.result.estimate = self.estimate;
        self.result
    }
}

/// Tuning-free multiple-grouping screening with `config.big_k` groupings.
pub fn mug_screen(problem: &DesignProblem, config: &MugConfig) -> Result<ScreeningResult> {
    let mut screener = MugScreener::new(problem, config)?;
    for _ in 0..config.big_k {
        screener.step()?;
    }
    Ok(screener.into_result())
}

/// Lasso screening alone (the initial stage of [`mug_screen`]).
pub fn lasso_screen(problem: &DesignProblem, solver: &SolverConfig) -> Result<ScreeningResult> {
    let config = MugConfig {
        big_k: 0,
        solver: solver.clone(),
        ..MugConfig::default()
    };
    mug_screen(problem, &config)
}

/// A group-based variable selection algorithm.
pub trait GroupSelector {
    fn select(&self, problem: &DesignProblem, grouping: &Grouping) -> Result<SupportSet>;
}

impl<F> GroupSelector for F
where
    F: Fn(&DesignProblem, &Grouping) -> Result<SupportSet>,
{
    fn select(&self, problem: &DesignProblem, grouping: &Grouping) -> Result<SupportSet> {
        self(problem, grouping)
    }
}

/// Group Lasso with `lambda` chosen to select `target` groups (or as many as
/// the path reaches).
#[derive(Debug, Clone)]
pub struct GroupLassoSelector {
    pub solver: SolverConfig,
    pub target: usize,
    pub rule: SupportRule,
}

impl GroupSelector for GroupLassoSelector {
    fn select(&self, problem: &DesignProblem, grouping: &Grouping) -> Result<SupportSet> {
        Ok(group_lasso_support(problem, grouping, &self.solver, self.target, self.rule)?.2)
    }
}

/// Runs a selector on each grouping and intersects the results.
pub fn mug_generic<S: GroupSelector + ?Sized>(
    problem: &DesignProblem,
    selector: &S,
    groupings: &[Grouping],
) -> Result<SupportSet> {
    let supports = groupings
        .iter()
        .map(|g| selector.select(problem, g))
        .collect::<Result<Vec<_>>>()?;
    intersect_supports(&supports)
}

/// Sure independence screening: the `target` variables with the largest
/// `|X_j^T y|`; ties go to the lower index.
pub fn sis_screen(problem: &DesignProblem, target: usize) -> Result<ScreeningResult> {
    let p = problem.p();
    if target > p {
        return Err(MugError::config("sis target", format!("{target} exceeds p = {p}")));
    }
    let y = problem.y();
    let scores: Vec<f64> = (0..p).map(|j| problem.column(j).dot(y).abs()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(target);
    Ok(ScreeningResult::single(Method::Sis, SupportSet::from_indices(order), Vec::new()))
}

/// Repeated hold-out validation for the Lasso.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LcvConfig {
    /// Fraction of rows used for training in each split.
    pub train_fraction: f64,
    pub repeats: usize,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Default for LcvConfig {
    fn default() -> Self {
        LcvConfig {
            train_fraction: 0.7,
            repeats: 50,
            solver: SolverConfig::default(),
            seed: 0,
        }
    }
}

impl LcvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(MugError::config("lcv.train_fraction", "must lie in (0, 1)"));
        }
        if self.repeats == 0 {
            return Err(MugError::config("lcv.repeats", "must be at least 1"));
        }
        self.solver.validate()
    }
}

/// Cross-validated Lasso.
///
/// Each repeat splits the rows at random, fits the Lasso path on the training
/// rows over a grid shared by all repeats, and records the held-out mean
/// squared error at every grid point. The `lambda` minimizing the error
/// averaged over repeats (ties to the larger `lambda`) is refitted on all rows
/// and its support returned.
pub fn lcv_screen(problem: &DesignProblem, config: &LcvConfig) -> Result<ScreeningResult> {
    config.validate()?;
    let n = problem.n();
    let train = ((config.train_fraction * n as f64).round() as usize).min(n);
    let test = n - train;
    if train < 2 || test < 2 {
        return Err(MugError::DegenerateSplit { train, test });
    }
    let grid = geometric_grid(
        compute_lambda_max(problem, &Grouping::singletons(problem.p())),
        &config.solver,
    );

    let errors: Vec<Vec<f64>> = (0..config.repeats)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut derive_trial_rng(config.seed, rep as u64, 0));
            let (train_rows, test_rows) = rows.split_at(train);
            let mut train_rows = train_rows.to_vec();
            let mut test_rows = test_rows.to_vec();
            train_rows.sort_unstable();
            test_rows.sort_unstable();
            let fit_on = problem.select_rows(&train_rows)?;
            let held_out = problem.select_rows(&test_rows)?;
            let path = solve_path_on_grid(&fit_on, PathSolver::Lasso, &config.solver, &grid, None)?;
            Ok(path
                .solutions
                .iter()
                .map(|s| held_out_mse(&held_out, &s.beta_hat))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_error: Vec<f64> = (0..grid.len())
        .map(|k| errors.iter().map(|e| e[k]).sum::<f64>() / errors.len() as f64)
        .collect();
    let best = mean_error
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(k, _)| k)
        .expect("grid is nonempty");

    let refit = solve_path_on_grid(problem, PathSolver::Lasso, &config.solver, &grid[..=best], None)?;
    let chosen = refit.solutions.last().expect("refit path is nonempty");
    let mut result = ScreeningResult::single(
        Method::Lcv,
        SupportSet::from_indices(chosen.active_groups.iter().copied()),
        vec![grid[best]],
    );
    result.non_converged_points = refit.non_converged();
    Ok(result)
}

fn held_out_mse(held_out: &DesignProblem, beta: &[f64]) -> f64 {
    let mut r = held_out.y().to_owned();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            r.scaled_add(-b, &held_out.column(j));
        }
    }
    r.dot(&r) / held_out.n() as f64
}

/// Intersection of a multiple-grouping estimate with a cross-validated Lasso
/// estimate.
pub fn combine_mug_lcv(mug: &ScreeningResult, lcv: &ScreeningResult) -> ScreeningResult {
    let estimate = mug.estimate.intersect(&lcv.estimate);
    let mut result = ScreeningResult::single(
        Method::MugPlusLcv,
        estimate,
        mug.lambdas_used.iter().chain(&lcv.lambdas_used).copied().collect(),
    );
    if result.estimate.is_empty() && !(mug.estimate.is_empty() && lcv.estimate.is_empty()) {
        result.warnings.push("multiple-grouping and cross-validated estimates are disjoint".into());
    }
    result
}

/// Runs both estimators and intersects them.
pub fn mug_plus_lcv(problem: &DesignProblem, mug: &MugConfig, lcv: &LcvConfig) -> Result<ScreeningResult> {
    let a = mug_screen(problem, mug)?;
    let b = lcv_screen(problem, lcv)?;
    Ok(combine_mug_lcv(&a, &b))
}
