use crate::partition::Grouping;
use crate::problem::DesignProblem;

use super::linalg::{col, correlations, dot, norm2, residual};
use super::SolverSolution;

/// The smallest `lambda` at which the all-zero vector is optimal:
/// `max_j ||X_{G_j}^T y||_2 / (n sqrt(m_j))`.
pub fn compute_lambda_max(problem: &DesignProblem, grouping: &Grouping) -> f64 {
    let n = problem.n() as f64;
    let y = problem.y().as_slice().expect("contiguous observations");
    grouping
        .groups()
        .iter()
        .map(|members| {
            let sq: f64 = members
                .iter()
                .map(|&j| {
                    let c = dot(col(problem, j), y);
                    c * c
                })
                .sum();
            sq.sqrt() / (n * (members.len() as f64).sqrt())
        })
        .fold(0.0, f64::max)
}

/// Worst violation of the group-Lasso optimality conditions at the solution.
///
/// With `r = y - X beta` and `c_j = X_{G_j}^T r / n`, an inactive group
/// contributes `max(0, ||c_j|| - lambda sqrt(m_j))` and an active one
/// `||c_j - lambda sqrt(m_j) beta_{G_j} / ||beta_{G_j}|| ||`. The residual is
/// zero exactly at an optimum.
pub fn kkt_check(problem: &DesignProblem, grouping: &Grouping, solution: &SolverSolution) -> f64 {
    let r = residual(problem, &solution.beta_hat);
    let corr = correlations(problem, &r);
    kkt_residual(&corr, &solution.beta_hat, grouping, solution.lambda)
}

/// KKT residual from precomputed correlations `X^T r / n`.
pub(crate) fn kkt_residual(corr: &[f64], beta: &[f64], grouping: &Grouping, lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut c_block = Vec::with_capacity(grouping.largest_group());
    let mut b_block = Vec::with_capacity(grouping.largest_group());
    for members in grouping.groups() {
        c_block.clear();
        b_block.clear();
        c_block.extend(members.iter().map(|&j| corr[j]));
        b_block.extend(members.iter().map(|&j| beta[j]));
        let weight = lambda * (members.len() as f64).sqrt();
        let b_norm = norm2(&b_block);
        let violation = if b_norm == 0.0 {
            (norm2(&c_block) - weight).max(0.0)
        } else {
            let scale = weight / b_norm;
            c_block
                .iter()
                .zip(&b_block)
                .map(|(c, b)| {
                    let d = c - scale * b;
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        };
        worst = worst.max(violation);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn orthonormal_problem() -> DesignProblem {
        // n = 4 rows of a scaled Hadamard matrix: X^T X / n = I.
        let x = array![
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0]
        ];
        let beta = [1.0, -0.5, 0.25, 0.0];
        let y = x.dot(&Array1::from(beta.to_vec()));
        DesignProblem::new_normalized(x, y).unwrap()
    }

    fn solution(beta: Vec<f64>, lambda: f64) -> SolverSolution {
        SolverSolution {
            beta_hat: beta,
            lambda,
            objective: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
            converged: true,
            active_groups: vec![],
            objective_trace: vec![],
        }
    }

    #[test]
    fn lambda_max_for_zero_y() {
        let p = orthonormal_problem().with_y(Array1::zeros(4)).unwrap();
        assert_eq!(compute_lambda_max(&p, &Grouping::singletons(4)), 0.0);
    }

    #[test]
    fn lambda_max_singletons_is_max_abs_correlation() {
        let p = orthonormal_problem();
        // z = X^T y / n = beta for an orthonormal design.
        assert!((compute_lambda_max(&p, &Grouping::singletons(4)) - 1.0).abs() < 1e-15);
        let pairs = Grouping::new(vec![vec![0, 1], vec![2, 3]], 4, 2).unwrap();
        let want = (1.0f64 + 0.25).sqrt() / 2f64.sqrt();
        assert!((compute_lambda_max(&p, &pairs) - want).abs() < 1e-15);
    }

    #[test]
    fn closed_form_optimum_has_zero_residual() {
        let p = orthonormal_problem();
        let g = Grouping::new(vec![vec![0, 1], vec![2, 3]], 4, 2).unwrap();
        let lambda = 0.2;
        // Block soft-threshold of z_G = beta_G.
        let mut beta = vec![0.0; 4];
        for members in g.groups() {
            let z: Vec<f64> = members.iter().map(|&j| [1.0, -0.5, 0.25, 0.0][j]).collect();
            let nz = norm2(&z);
            let shrink = (1.0 - lambda * 2f64.sqrt() / nz).max(0.0);
            for (k, &j) in members.iter().enumerate() {
                beta[j] = shrink * z[k];
            }
        }
        assert!(kkt_check(&p, &g, &solution(beta, lambda)) <= 1e-10);
    }

    #[test]
    fn zero_above_lambda_max_has_zero_residual() {
        let p = orthonormal_problem();
        let g = Grouping::singletons(4);
        let lmax = compute_lambda_max(&p, &g);
        assert_eq!(kkt_check(&p, &g, &solution(vec![0.0; 4], lmax)), 0.0);
        assert_eq!(kkt_check(&p, &g, &solution(vec![0.0; 4], 2.0 * lmax)), 0.0);
    }

    #[test]
    fn perturbed_optimum_has_positive_residual() {
        let p = orthonormal_problem();
        let g = Grouping::singletons(4);
        let lambda = 0.1;
        let beta = vec![0.9, -0.4, 0.15, 0.0];
        assert!(kkt_check(&p, &g, &solution(beta.clone(), lambda)) <= 1e-12);
        let mut bumped = beta;
        bumped[0] += 0.1;
        assert!(kkt_check(&p, &g, &solution(bumped, lambda)) > 0.05);
    }
}
