//! The observation model `y = X beta* + w` and column normalization.

use ndarray::{Array1, Array2, ArrayView1, ShapeBuilder};

use crate::error::{MugError, Result};
use crate::support::SupportSet;

/// Tolerance for the normalization assumption `||X_j||^2 / n = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// An observed pair `(X, y)`.
///
/// `X` is kept in column-major layout so that column slices are contiguous;
/// every solver in this crate works column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    x: Array2<f64>,
    y: Array1<f64>,
    normalized: bool,
}

impl DesignProblem {
    /// Validates shapes. The `normalized` flag starts false; use
    /// [`normalize_columns`] to establish it.
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(MugError::EmptyInput("design matrix has no rows or no columns"));
        }
        if y.len() != n {
            return Err(MugError::DimensionMismatch {
                what: "observation vector length",
                expected: n,
                found: y.len(),
            });
        }
        Ok(DesignProblem {
            x: to_column_major(x),
            y,
            normalized: false,
        })
    }

    /// Builds a problem from an already-normalized matrix, verifying the claim.
    pub fn new_normalized(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let mut problem = DesignProblem::new(x, y)?;
        problem.check_normalized()?;
        problem.normalized = true;
        Ok(problem)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.column(j)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Same design, different observations.
    pub fn with_y(&self, y: Array1<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(MugError::DimensionMismatch {
                what: "observation vector length",
                expected: self.n(),
                found: y.len(),
            });
        }
        Ok(DesignProblem {
            x: self.x.clone(),
            y,
            normalized: self.normalized,
        })
    }

    /// The sub-problem made of the given rows. The result is not flagged as
    /// normalized since column norms change under row selection.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select(ndarray::Axis(0), rows);
        let y = self.y.select(ndarray::Axis(0), rows);
        DesignProblem::new(x, y)
    }

    /// Checks the normalization assumption on every column.
    pub fn check_normalized(&self) -> Result<()> {
        let n = self.n() as f64;
        for (j, col) in self.x.columns().into_iter().enumerate() {
            let sq = col.dot(&col);
            if sq == 0.0 {
                return Err(MugError::ZeroColumn { column: j + 1 });
            }
            if (sq / n - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(MugError::NotNormalized);
            }
        }
        Ok(())
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(MugError::NotNormalized)
        }
    }
}

fn to_column_major(x: Array2<f64>) -> Array2<f64> {
    if x.t().is_standard_layout() {
        return x;
    }
    let mut out = Array2::zeros(x.dim().f());
    out.assign(&x);
    out
}

/// Rescales every column so that `||X_j||_2 / sqrt(n) = 1`.
///
/// Returns the normalized problem and the per-column multipliers `s_j`
/// (`X_new[:, j] = s_j * X[:, j]`). A coefficient vector for the original
/// design maps to the normalized one as `beta_new[j] = beta[j] / s_j`.
pub fn normalize_columns(problem: &DesignProblem) -> Result<(DesignProblem, Vec<f64>)> {
    let (x, scales) = normalize_matrix(problem.x.clone())?;
    Ok((
        DesignProblem {
            x,
            y: problem.y.clone(),
            normalized: true,
        },
        scales,
    ))
}

/// Column normalization on a bare matrix.
pub fn normalize_matrix(x: Array2<f64>) -> Result<(Array2<f64>, Vec<f64>)> {
    let mut x = to_column_major(x);
    let sqrt_n = (x.nrows() as f64).sqrt();
    let mut scales = Vec::with_capacity(x.ncols());
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let norm = col.dot(&col).sqrt();
        if norm == 0.0 {
            return Err(MugError::ZeroColumn { column: j + 1 });
        }
        let s = sqrt_n / norm;
        if s != 1.0 {
            col.mapv_inplace(|v| v * s);
        }
        scales.push(s);
    }
    Ok((x, scales))
}

/// The unknown quantities of a simulated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub beta_star: Vec<f64>,
    pub support: SupportSet,
    pub beta_min: f64,
    pub sigma: f64,
}

impl GroundTruth {
    pub fn new(beta_star: Vec<f64>, sigma: f64) -> Self {
        let support = SupportSet::of_nonzeros(&beta_star);
        let beta_min = support
            .iter()
            .map(|j| beta_star[j].abs())
            .fold(f64::INFINITY, f64::min);
        GroundTruth {
            beta_min: if support.is_empty() { 0.0 } else { beta_min },
            beta_star,
            support,
            sigma,
        }
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }
}
