//! Discrete weighted Bochner identity for radial and periodic fields.

use crate::discretize::{f_laplacian_fd_with, gradient_fd, second_derivative_fd, Field, GridKind, OuterBoundary};
use crate::error::{LabError, Result};
use crate::geometry::{hessian_norm_sq_radial, ric_f_eigenvalues, ModelSpace};

/// Nodes next to the outer radial boundary whose residual mixes nested
/// one-sided stencils and converges at first order only.
const OUTER_GUARD: usize = 3;

/// `½Δ_f|∇u|² − (|∇²u|² + ⟨∇Δ_f u, ∇u⟩ + Ric_f(∇u,∇u))`, and, when `m` is
/// given, the margin of the equality right side over the `m`-form
/// `(Δ_f u)²/(m+n) + ⟨∇Δ_f u, ∇u⟩ + Ric_f^m(∇u,∇u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BochnerResidual {
    pub equality: Field,
    pub inequality_margin: Option<Field>,
}

impl BochnerResidual {
    /// Nodes whose stencils are all second order (the radial outer boundary
    /// layer is excluded).
    pub fn interior(&self) -> std::ops::Range<usize> {
        let n = self.equality.len();
        match self.equality.grid.kind {
            GridKind::Periodic => 0..n,
            GridKind::Radial => 0..n.saturating_sub(OUTER_GUARD),
        }
    }

    /// Max-norm of the equality residual over [`Self::interior`].
    pub fn equality_max(&self) -> f64 {
        self.equality.values[self.interior()].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest inequality margin over [`Self::interior`].
    pub fn margin_min(&self) -> Option<f64> {
        let range = self.interior();
        self.inequality_margin.as_ref().map(|f| f.values[range].iter().copied().fold(f64::INFINITY, f64::min))
    }
}

pub fn bochner_residual(space: &ModelSpace, u: &Field, m: Option<f64>) -> Result<BochnerResidual> {
    if let Some(m) = m {
        if !(m > 0.0) {
            return Err(LabError::Domain(format!("m must be positive, got {m}")));
        }
    }
    let grid = u.grid;
    if grid.len() < 5 {
        return Err(LabError::Shape("Bochner residual needs at least five nodes".into()));
    }
    let outer = OuterBoundary::OneSided;
    let du = gradient_fd(u);
    let d2u = second_derivative_fd(u);
    let lap = f_laplacian_fd_with(space, u, outer)?;
    let grad_sq = du.map(|d| d * d);
    let lhs = f_laplacian_fd_with(space, &grad_sq, outer)?;
    let grad_lap = gradient_fd(&lap);
    let dim = space.n as f64;

    let mut equality = Vec::with_capacity(grid.len());
    let mut margin = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = grid.node(i);
        let (u1, u2) = (du.values[i], d2u.values[i]);
        let at_pole = grid.kind == GridKind::Radial && i == 0;
        let (hess, ricci) = if at_pole {
            // all principal curvatures of an even radial function equal u''(0)
            (dim * u2 * u2, space.ric_f_origin())
        } else {
            (hessian_norm_sq_radial(space, u1, u2, r)?, ric_f_eigenvalues(space, r)?.0)
        };
        let coupling = grad_lap.values[i] * u1;
        equality.push(0.5 * lhs.values[i] - (hess + coupling + ricci * u1 * u1));
        if let Some(m) = m {
            // RHS_eq − RHS_m = |∇²u|² − (Δ_f u)²/(m+n) + (f'·u')²/m
            let fp = space.weight_at(r).d1;
            let l = lap.values[i];
            margin.push(hess - l * l / (m + dim) + fp * fp * u1 * u1 / m);
        }
    }
    Ok(BochnerResidual {
        equality: Field { grid, values: equality, time: u.time },
        inequality_margin: m.map(|_| Field { grid, values: margin, time: u.time }),
    })
}
