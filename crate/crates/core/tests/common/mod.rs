#![allow(dead_code)]

use mugscreen::datagen::{generate_ind_design, simulate_instance};
use mugscreen::grouping::derive_trial_rng;
use mugscreen::solver::group_penalty;
use mugscreen::{DesignProblem, GroundTruth, Grouping};
use ndarray::{Array1, Array2};

/// Sylvester-Hadamard matrix of order `n` (a power of two).
pub fn hadamard(n: usize) -> Array2<f64> {
    assert!(n.is_power_of_two());
    Array2::from_shape_fn((n, n), |(i, j)| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
}

pub fn ind_instance(seed: u64, n: usize, p: usize, k: usize, magnitude: f64, sigma: f64) -> (DesignProblem, GroundTruth) {
    let mut rng = derive_trial_rng(seed, 0, 0);
    let x = generate_ind_design(n, p, &mut rng).unwrap();
    simulate_instance(&x, k, magnitude, sigma, &mut rng).unwrap()
}

pub fn objective(problem: &DesignProblem, grouping: &Grouping, lambda: f64, beta: &[f64]) -> f64 {
    let b = Array1::from(beta.to_vec());
    let r = problem.y() - &problem.x().dot(&b);
    r.dot(&r) / (2.0 * problem.n() as f64) + lambda * group_penalty(beta, grouping)
}

/// Exhaustive search on a box, then repeated refinement around the best point.
pub fn grid_search(problem: &DesignProblem, grouping: &Grouping, lambda: f64, radius: f64) -> Vec<f64> {
    let p = problem.p();
    let mut center = vec![0.0; p];
    let mut half = radius;
    let steps = 40usize;
    for _ in 0..12 {
        let h = 2.0 * half / steps as f64;
        let mut best = (f64::INFINITY, center.clone());
        let mut idx = vec![0usize; p];
        loop {
            let point: Vec<f64> = (0..p).map(|j| center[j] - half + h * idx[j] as f64).collect();
            let f = objective(problem, grouping, lambda, &point);
            if f < best.0 {
                best = (f, point);
            }
            let mut j = 0;
            while j < p {
                idx[j] += 1;
                if idx[j] <= steps {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == p {
                break;
            }
        }
        center = best.1;
        half = 2.0 * h;
    }
    center
}
