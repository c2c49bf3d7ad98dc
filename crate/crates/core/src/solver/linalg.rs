use crate::problem::DesignProblem;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub(crate) fn col(problem: &DesignProblem, j: usize) -> &[f64] {
    problem
        .x()
        .column(j)
        .to_slice()
        .expect("design matrix is stored column-major")
}

/// `y - X beta`, skipping zero coefficients.
pub(crate) fn residual(problem: &DesignProblem, beta: &[f64]) -> Vec<f64> {
    let mut r = problem.y().to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            axpy(-b, col(problem, j), &mut r);
        }
    }
    r
}

/// `X^T r / n`
pub(crate) fn correlations(problem: &DesignProblem, r: &[f64]) -> Vec<f64> {
    let n = problem.n() as f64;
    (0..problem.p()).map(|j| dot(col(problem, j), r) / n).collect()
}

/// Largest eigenvalue of a small symmetric positive semidefinite matrix given
/// in row-major order, by power iteration on the Rayleigh quotient.
pub(crate) fn largest_eigenvalue_psd(gram: &[f64], m: usize) -> f64 {
    match m {
        0 => 0.0,
        1 => gram[0],
        2 => {
            let (a, b, d) = (gram[0], gram[1], gram[3]);
            let half_trace = 0.5 * (a + d);
            let gap = 0.5 * (a - d);
            half_trace + (gap * gap + b * b).sqrt()
        }
        _ => {
            let mut v = vec![1.0 / (m as f64).sqrt(); m];
            let mut w = vec![0.0; m];
            let mut estimate = 0.0;
            for _ in 0..1000 {
                for i in 0..m {
                    w[i] = dot(&gram[i * m..(i + 1) * m], &v);
                }
                let next = dot(&v, &w);
                let norm = norm2(&w);
                if norm == 0.0 {
                    return 0.0;
                }
                for i in 0..m {
                    v[i] = w[i] / norm;
                }
                if (next - estimate).abs() <= 1e-15 * next.abs() {
                    estimate = next;
                    break;
                }
                estimate = next;
            }
            estimate
        }
    }
}

/// Largest eigenvalue of `X^T X / n` by power iteration.
pub(crate) fn design_lipschitz(problem: &DesignProblem, steps: usize) -> f64 {
    let (n, p) = (problem.n(), problem.p());
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut xv = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..steps {
        xv.iter_mut().for_each(|e| *e = 0.0);
        for (j, &vj) in v.iter().enumerate() {
            axpy(vj, col(problem, j), &mut xv);
        }
        let w = correlations(problem, &xv);
        estimate = dot(&v, &w);
        let norm = norm2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        for (vj, wj) in v.iter_mut().zip(&w) {
            *vj = wj / norm;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_small_matrices() {
        assert_eq!(largest_eigenvalue_psd(&[3.0], 1), 3.0);
        let two = largest_eigenvalue_psd(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((two - 3.0).abs() < 1e-15);
        // diag(1, 4, 2) rotated is still max 4; use a plain diagonal here.
        let three = largest_eigenvalue_psd(&[1.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 2.0], 3);
        assert!((three - 4.0).abs() < 1e-12);
        // All-ones 3x3 has top eigenvalue 3.
        let ones = largest_eigenvalue_psd(&[1.0; 9], 3);
        assert!((ones - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 91.0);
    }
}
