//! Banded solves for the implicit diffusion step and the periodic eigenproblem.

use crate::error::{LabError, Result};

/// Tridiagonal matrix in three diagonals. `lower[0]` and `upper[n−1]` are the
/// wrap-around corners when the matrix is used as a cyclic system and are
/// ignored by [`Tridiagonal::solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x` treating the corners as absent.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// `y = A x` including the corner entries `A[0][n−1] = lower[0]`,
    /// `A[n−1][0] = upper[n−1]`.
    pub fn apply_cyclic(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = self.apply(x);
        y[0] += self.lower[0] * x[n - 1];
        y[n - 1] += self.upper[n - 1] * x[0];
        y
    }

    /// Thomas algorithm. Requires nonvanishing pivots, which holds for the
    /// diagonally dominant systems assembled by the solver.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(LabError::Shape(format!("rhs length {} vs system {}", rhs.len(), n)));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 {
            return Err(LabError::Numeric("zero pivot at row 0".into()));
        }
        c[0] = self.upper[0] / pivot;
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(LabError::Numeric(format!("zero pivot at row {i}")));
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// Cyclic system via Sherman-Morrison on the Thomas solve.
    pub fn solve_cyclic(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if n < 3 {
            return Err(LabError::Shape("cyclic solve needs at least 3 unknowns".into()));
        }
        let alpha = self.upper[n - 1]; // A[n−1][0]
        let beta = self.lower[0]; // A[0][n−1]
        let gamma = -self.diag[0];
        let mut reduced = self.clone();
        reduced.diag[0] -= gamma;
        reduced.diag[n - 1] -= alpha * beta / gamma;
        let x = reduced.solve(rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = reduced.solve(&u)?;
        let factor = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
    }
}
