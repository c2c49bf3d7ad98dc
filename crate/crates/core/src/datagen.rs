//! Synthetic designs, sparse coefficient vectors, noise, and CSV designs.
//!
//! Every generated matrix is column-normalized before it is returned, and
//! coefficient vectors are drawn directly in the normalized coordinates, so
//! `beta_min` is the smallest nonzero magnitude the solvers actually see.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ShapeBuilder};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MugError, Result};
use crate::problem::{normalize_matrix, DesignProblem, GroundTruth};

/// Design family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// I.i.d. standard normal entries.
    Ind,
    /// Rows i.i.d. `N(0, Sigma)` with `Sigma_ij = mu^|i-j|`.
    Top,
    /// A design matrix read from a CSV file.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub design: DesignKind,
    pub p: usize,
    pub n: usize,
    pub k: usize,
    pub beta_min_magnitude: f64,
    pub sigma: f64,
    pub mu: f64,
    pub seed: u64,
    pub csv_path: Option<PathBuf>,
    pub csv_header: bool,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            design: DesignKind::Ind,
            p: 1000,
            n: 100,
            k: 10,
            beta_min_magnitude: 0.5,
            sigma: 0.5,
            mu: -0.4,
            seed: 0,
            csv_path: None,
            csv_header: false,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.design != DesignKind::Csv && (self.n == 0 || self.p == 0) {
            return Err(MugError::config("sim.n/sim.p", "must be at least 1"));
        }
        if self.design != DesignKind::Csv && self.k > self.p {
            return Err(MugError::config("sim.k", format!("k = {} exceeds p = {}", self.k, self.p)));
        }
        if !(self.sigma >= 0.0) {
            return Err(MugError::config("sim.sigma", "must be nonnegative"));
        }
        if !(self.beta_min_magnitude >= 0.0) {
            return Err(MugError::config("sim.beta_min_magnitude", "must be nonnegative"));
        }
        if self.design == DesignKind::Top && !(self.mu.abs() < 1.0) {
            return Err(MugError::config("sim.mu", "Toeplitz parameter must satisfy |mu| < 1"));
        }
        if self.design == DesignKind::Csv && self.csv_path.is_none() {
            return Err(MugError::config("sim.csv_path", "required for the csv design"));
        }
        Ok(())
    }

    /// The normalized design described by this spec.
    pub fn design_matrix<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Array2<f64>> {
        match self.design {
            DesignKind::Ind => generate_ind_design(self.n, self.p, rng),
            DesignKind::Top => generate_top_design(self.n, self.p, self.mu, rng),
            DesignKind::Csv => {
                let path = self.csv_path.as_deref().ok_or_else(|| MugError::config("sim.csv_path", "missing"))?;
                load_design_csv(path, self.csv_header)
            }
        }
    }
}

/// `n x p` standard normal entries, column-normalized.
pub fn generate_ind_design<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<Array2<f64>> {
    let mut x = Array2::<f64>::zeros((n, p).f());
    for v in x.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    Ok(normalize_matrix(x)?.0)
}

/// Rows drawn from `N(0, Sigma)`, `Sigma_ij = mu^|i-j|`, through the AR(1)
/// recursion `x_1 = z_1`, `x_j = mu x_{j-1} + sqrt(1 - mu^2) z_j`, which has
/// exactly this covariance. Column-normalized.
pub fn generate_top_design<R: Rng + ?Sized>(n: usize, p: usize, mu: f64, rng: &mut R) -> Result<Array2<f64>> {
    if !(mu.abs() < 1.0) {
        return Err(MugError::config("mu", "Toeplitz parameter must satisfy |mu| < 1"));
    }
    let innovation = (1.0 - mu * mu).sqrt();
    let mut x = Array2::<f64>::zeros((n, p).f());
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { mu * prev + innovation * z };
            x[[i, j]] = v;
            prev = v;
        }
    }
    Ok(normalize_matrix(x)?.0)
}

/// `Sigma_ij = mu^|i-j|` of the Toeplitz design.
pub fn toeplitz_covariance(mu: f64, i: usize, j: usize) -> f64 {
    mu.powi(i.abs_diff(j) as i32)
}

/// A `k`-sparse vector whose nonzeros all have magnitude `magnitude` and
/// independent uniformly random signs, on a uniformly random support.
pub fn generate_beta<R: Rng + ?Sized>(p: usize, k: usize, magnitude: f64, sigma: f64, rng: &mut R) -> Result<GroundTruth> {
    if k > p {
        return Err(MugError::config("k", format!("k = {k} exceeds p = {p}")));
    }
    let mut beta = vec![0.0; p];
    let mut support = rand::seq::index::sample(rng, p, k).into_vec();
    support.sort_unstable();
    for j in support {
        beta[j] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }
    Ok(GroundTruth::new(beta, sigma))
}

/// Changes the magnitude of one randomly chosen support entry, keeping its
/// sign. A zero magnitude removes it from the support.
pub fn perturb_one_entry<R: Rng + ?Sized>(truth: &GroundTruth, magnitude: f64, rng: &mut R) -> GroundTruth {
    if truth.support.is_empty() {
        return truth.clone();
    }
    let pick = truth.support.indices()[rng.random_range(0..truth.k())];
    let mut beta = truth.beta_star.clone();
    beta[pick] = beta[pick].signum() * magnitude;
    GroundTruth::new(beta, truth.sigma)
}

/// `y = X beta + w` with `w ~ N(0, sigma^2 I)`.
pub fn simulate_observations<R: Rng + ?Sized>(
    x: &Array2<f64>,
    beta_star: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<Array1<f64>> {
    if beta_star.len() != x.ncols() {
        return Err(MugError::DimensionMismatch {
            what: "coefficient vector length",
            expected: x.ncols(),
            found: beta_star.len(),
        });
    }
    let mut y = x.dot(&ndarray::ArrayView1::from(beta_star));
    if sigma > 0.0 {
        for v in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sigma * z;
        }
    }
    Ok(y)
}

/// Draws `beta*` and noise for a normalized design and packages the problem.
pub fn simulate_instance<R: Rng + ?Sized>(
    design: &Array2<f64>,
    k: usize,
    magnitude: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<(DesignProblem, GroundTruth)> {
    let truth = generate_beta(design.ncols(), k, magnitude, sigma, rng)?;
    let problem = observe(design, &truth, rng)?;
    Ok((problem, truth))
}

/// Simulates observations for a given truth on a normalized design.
pub fn observe<R: Rng + ?Sized>(design: &Array2<f64>, truth: &GroundTruth, rng: &mut R) -> Result<DesignProblem> {
    let y = simulate_observations(design, &truth.beta_star, truth.sigma, rng)?;
    DesignProblem::new_normalized(design.clone(), y)
}

fn read_numeric_csv(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    let mut width = None;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row + 1, |pos| pos.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(MugError::RaggedRows {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            });
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| MugError::NonNumericCell {
                        path: path.to_path_buf(),
                        row: rows.len() + 1,
                        column: c + 1,
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(MugError::BadFile {
            path: path.to_path_buf(),
            reason: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// Reads a rectangular numeric CSV (rows are observations) without
/// normalizing it.
pub fn read_design_csv(path: &Path, header: bool) -> Result<Array2<f64>> {
    let rows = read_numeric_csv(path, header)?;
    let (n, p) = (rows.len(), rows[0].len());
    let mut x = Array2::<f64>::zeros((n, p).f());
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    Ok(x)
}

/// Reads a design CSV and normalizes its columns.
pub fn load_design_csv(path: &Path, header: bool) -> Result<Array2<f64>> {
    let x = read_design_csv(path, header)?;
    log::info!("loaded {}: n = {}, p = {}", path.display(), x.nrows(), x.ncols());
    Ok(normalize_matrix(x)?.0)
}

/// Reads observations: either one value per line or a single row.
pub fn load_vector_csv(path: &Path, header: bool) -> Result<Array1<f64>> {
    let rows = read_numeric_csv(path, header)?;
    if rows[0].len() == 1 {
        Ok(rows.into_iter().map(|r| r[0]).collect())
    } else if rows.len() == 1 {
        Ok(Array1::from(rows.into_iter().next().unwrap()))
    } else {
        Err(MugError::BadFile {
            path: path.to_path_buf(),
            reason: format!("expected a single column or row, found {} x {}", rows.len(), rows[0].len()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::derive_trial_rng;
    use std::io::Write;

    #[test]
    fn ind_design_is_normalized_and_seeded() {
        let x = generate_ind_design(40, 25, &mut derive_trial_rng(1, 0, 0)).unwrap();
        let again = generate_ind_design(40, 25, &mut derive_trial_rng(1, 0, 0)).unwrap();
        assert_eq!(x, again);
        for col in x.columns() {
            assert!((col.dot(&col) / 40.0 - 1.0).abs() <= 1e-10);
        }
        assert!(x.t().is_standard_layout());
    }

    #[test]
    fn toeplitz_entries() {
        assert!((toeplitz_covariance(-0.4, 0, 2) - 0.16).abs() < 1e-15);
        assert_eq!(toeplitz_covariance(-0.4, 3, 3), 1.0);
        assert!((toeplitz_covariance(-0.4, 4, 3) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn top_rejects_unit_mu() {
        assert!(generate_top_design(5, 5, 1.0, &mut derive_trial_rng(0, 0, 0)).is_err());
    }

    #[test]
    fn beta_shapes() {
        let t = generate_beta(100, 5, 1.0, 1.0, &mut derive_trial_rng(2, 0, 0)).unwrap();
        assert_eq!(t.k(), 5);
        assert_eq!(t.beta_min, 1.0);
        assert!(t.beta_star.iter().all(|b| [0.0, 1.0, -1.0].contains(b)));
        let none = generate_beta(10, 0, 0.5, 1.0, &mut derive_trial_rng(2, 0, 0)).unwrap();
        assert!(none.support.is_empty());
        assert!(none.beta_star.iter().all(|&b| b == 0.0));
        assert!(generate_beta(3, 4, 1.0, 1.0, &mut derive_trial_rng(0, 0, 0)).is_err());
    }

    #[test]
    fn perturbation_changes_one_entry() {
        let mut rng = derive_trial_rng(3, 0, 0);
        let t = generate_beta(50, 10, 2.0, 0.5, &mut rng).unwrap();
        let small = perturb_one_entry(&t, 0.1, &mut rng);
        assert_eq!(small.k(), 10);
        assert_eq!(small.beta_min, 0.1);
        let changed = t.beta_star.iter().zip(&small.beta_star).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 1);
        let gone = perturb_one_entry(&t, 0.0, &mut rng);
        assert_eq!(gone.k(), 9);
    }

    #[test]
    fn noiseless_observations_are_exact() {
        let x = generate_ind_design(10, 4, &mut derive_trial_rng(0, 0, 0)).unwrap();
        let beta = [1.0, 0.0, -2.0, 0.5];
        let y = simulate_observations(&x, &beta, 0.0, &mut derive_trial_rng(0, 0, 1)).unwrap();
        let want = x.dot(&Array1::from(beta.to_vec()));
        assert_eq!(y, want);
    }

    #[test]
    fn noise_variance() {
        let n = 10_000;
        let x = Array2::<f64>::zeros((n, 1));
        let sigma = 0.5;
        let y = simulate_observations(&x, &[0.0], sigma, &mut derive_trial_rng(11, 0, 0)).unwrap();
        let mean = y.sum() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.05, "variance {var}");
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn identity_csv_loads_exactly() {
        let f = write_tmp("1,0\n0,1\n");
        let x = read_design_csv(f.path(), false).unwrap();
        assert_eq!(x, ndarray::array![[1.0, 0.0], [0.0, 1.0]]);
        // ||e_j||^2 / n = 1/2, so normalization scales by sqrt(2).
        let normalized = load_design_csv(f.path(), false).unwrap();
        assert!((normalized[[0, 0]] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn header_is_skipped_when_requested() {
        let f = write_tmp("a,b\n1,2\n3,4\n");
        assert_eq!(read_design_csv(f.path(), true).unwrap().dim(), (2, 2));
        assert!(matches!(
            read_design_csv(f.path(), false),
            Err(MugError::NonNumericCell { row: 1, column: 1, .. })
        ));
    }

    #[test]
    fn ragged_rows_report_line() {
        let f = write_tmp("1,2,3\n4,5,6\n7,8\n");
        match read_design_csv(f.path(), false) {
            Err(MugError::RaggedRows { line, expected, found, .. }) => {
                assert_eq!((line, expected, found), (3, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_location() {
        let f = write_tmp("1,2\n3,x\n");
        assert!(matches!(
            read_design_csv(f.path(), false),
            Err(MugError::NonNumericCell { row: 2, column: 2, .. })
        ));
    }

    #[test]
    fn vector_csv_forms() {
        let col = write_tmp("1\n2\n3\n");
        assert_eq!(load_vector_csv(col.path(), false).unwrap().to_vec(), vec![1.0, 2.0, 3.0]);
        let row = write_tmp("1,2,3\n");
        assert_eq!(load_vector_csv(row.path(), false).unwrap().len(), 3);
        let grid = write_tmp("1,2\n3,4\n");
        assert!(load_vector_csv(grid.path(), false).is_err());
    }
}
