//! Anderson extrapolation of coordinate-descent iterates.
//!
//! Every `DEPTH + 1` sweeps the last iterates are combined with weights that
//! minimize the norm of the combined successive differences. Callers accept
//! the extrapolated point only if it lowers the objective, so convergence
//! guarantees of the underlying sweeps are unaffected.

pub(crate) const DEPTH: usize = 5;

pub(crate) struct Anderson {
    history: Vec<Vec<f64>>,
}

impl Anderson {
    pub(crate) fn new() -> Self {
        Anderson {
            history: Vec::with_capacity(DEPTH + 1),
        }
    }

    pub(crate) fn reset(&mut self) {
        self.history.clear();
    }

    /// Records an iterate; returns an extrapolated point once enough
    /// iterates are stored (and then starts a fresh window).
    pub(crate) fn push(&mut self, x: Vec<f64>) -> Option<Vec<f64>> {
        self.history.push(x);
        if self.history.len() <= DEPTH {
            return None;
        }
        let out = extrapolate(&self.history);
        self.history.clear();
        out
    }
}

fn extrapolate(xs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = xs.len() - 1;
    let diffs: Vec<Vec<f64>> = (0..k)
        .map(|i| xs[i + 1].iter().zip(&xs[i]).map(|(a, b)| a - b).collect())
        .collect();
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v: f64 = diffs[i].iter().zip(&diffs[j]).map(|(a, b)| a * b).sum();
            gram[i * k + j] = v;
            gram[j * k + i] = v;
        }
    }
    let trace: f64 = (0..k).map(|i| gram[i * k + i]).sum();
    if !(trace > 0.0) {
        return None;
    }
    for i in 0..k {
        gram[i * k + i] += 1e-10 * trace;
    }
    let z = solve_dense(gram, vec![1.0; k], k)?;
    let total: f64 = z.iter().sum();
    if !total.is_finite() || total.abs() < f64::EPSILON {
        return None;
    }
    let mut out = vec![0.0; xs[0].len()];
    for (w, x) in z.iter().zip(&xs[1..]) {
        let c = w / total;
        for (o, v) in out.iter_mut().zip(x) {
            *o += c * v;
        }
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Gaussian elimination with partial pivoting on a row-major `k x k` system.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, k: usize) -> Option<Vec<f64>> {
    for c in 0..k {
        let pivot = (c..k).max_by(|&i, &j| a[i * k + c].abs().total_cmp(&a[j * k + c].abs()))?;
        if a[pivot * k + c] == 0.0 {
            return None;
        }
        if pivot != c {
            for j in 0..k {
                a.swap(c * k + j, pivot * k + j);
            }
            b.swap(c, pivot);
        }
        for i in c + 1..k {
            let f = a[i * k + c] / a[c * k + c];
            for j in c..k {
                a[i * k + j] -= f * a[c * k + j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| a[i * k + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * k + i];
    }
    Some(x)
}
