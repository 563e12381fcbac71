//! Nodewise residuals of the two evolution inequalities behind the estimates.
//!
//! Both residuals are `LHS − RHS` of an inequality that should be `≥ 0`; the
//! discrete versions are `≥ −tol` with `tol` shrinking under refinement. Time
//! derivatives are centered, so only interior frames are accepted.

use crate::discretize::{f_laplacian_fd_with, gradient_fd, Field, GridKind, OuterBoundary};
use crate::error::{LabError, Result};
use crate::solver::{derived_fields, DerivedFields, Solution};

use super::EstimateConstants;

/// Radial nodes at the outer boundary left out of residual minima: the
/// nested one-sided stencils there are only first order.
const OUTER_GUARD: usize = 3;

/// Deliberate sign errors used to show the residual checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    Faithful,
    /// Flips the sign of the gradient-coupling term.
    FlipCoupling,
    /// Flips the sign of the quadratic `ω²` term. This only weakens the
    /// inequality, so it is expected to pass.
    FlipQuadratic,
}

impl Mutation {
    fn signs(self) -> (f64, f64) {
        match self {
            Mutation::Faithful => (1.0, 1.0),
            Mutation::FlipCoupling => (-1.0, 1.0),
            Mutation::FlipQuadratic => (1.0, -1.0),
        }
    }
}

/// Minimum of a residual field over nodes with second-order stencils.
pub fn interior_min(field: &Field) -> f64 {
    let end = match field.grid.kind {
        GridKind::Periodic => field.len(),
        GridKind::Radial => field.len().saturating_sub(OUTER_GUARD),
    };
    field.values[..end].iter().copied().fold(f64::INFINITY, f64::min)
}

struct Stencil {
    prev: DerivedFields,
    here: DerivedFields,
    next: DerivedFields,
    dt2: f64,
}

fn stencil(solution: &Solution, frame: usize) -> Result<Stencil> {
    if frame == 0 || frame + 1 >= solution.frames.len() {
        return Err(LabError::Domain(format!(
            "frame {frame} has no centered time difference (valid: 1..{})",
            solution.frames.len().saturating_sub(1)
        )));
    }
    Ok(Stencil {
        prev: derived_fields(solution, frame - 1)?,
        here: derived_fields(solution, frame)?,
        next: derived_fields(solution, frame + 1)?,
        dt2: solution.time(frame + 1) - solution.time(frame - 1),
    })
}

/// Residual of `(Δ_f−∂_t)ω_h ≥ −4h⁻¹⟨∇h,∇ω_h⟩ + 4h⁻³ω_h² − [2(n−1)K + a ln(D or δ) + 2a]ω_h`.
pub fn lemma1_residual(solution: &Solution, consts: &EstimateConstants, frame: usize) -> Result<Field> {
    lemma1_residual_with(solution, consts, frame, Mutation::Faithful)
}

pub fn lemma1_residual_with(
    solution: &Solution,
    consts: &EstimateConstants,
    frame: usize,
    mutation: Mutation,
) -> Result<Field> {
    let st = stencil(solution, frame)?;
    let coef = consts.lemma1_coefficient()?;
    let (sc, sq) = mutation.signs();
    let omega = &st.here.omega_h;
    let h = &st.here.h;
    let lap = f_laplacian_fd_with(&solution.space, omega, OuterBoundary::OneSided)?;
    let dh = gradient_fd(h);
    let dw = gradient_fd(omega);
    let values = (0..omega.len())
        .map(|i| {
            let (hv, w) = (h.values[i], omega.values[i]);
            let dwdt = (st.next.omega_h.values[i] - st.prev.omega_h.values[i]) / st.dt2;
            lap.values[i] - dwdt + sc * 4.0 * dh.values[i] * dw.values[i] / hv - sq * 4.0 * w * w / (hv * hv * hv)
                + coef * w
        })
        .collect();
    Ok(Field { grid: omega.grid, values, time: omega.time })
}

/// Residual of `(Δ_f−∂_t)ω_g ≥ (2(g−ln D)/(μ−g))⟨∇g,∇ω_g⟩ + 2(μ−g)ω_g² − 2(a+(n−1)K)ω_g − (2ag/(μ−g))ω_g`.
pub fn lemma2_residual(solution: &Solution, consts: &EstimateConstants, frame: usize) -> Result<Field> {
    lemma2_residual_with(solution, consts, frame, Mutation::Faithful)
}

pub fn lemma2_residual_with(
    solution: &Solution,
    consts: &EstimateConstants,
    frame: usize,
    mutation: Mutation,
) -> Result<Field> {
    let st = stencil(solution, frame)?;
    let (sc, sq) = mutation.signs();
    let ln_d = consts.upper.ln();
    let (mu, a) = (consts.mu, consts.a);
    let linear = 2.0 * consts.lemma2_coefficient();
    let omega = &st.here.omega_g;
    let g = &st.here.g;
    let lap = f_laplacian_fd_with(&solution.space, omega, OuterBoundary::OneSided)?;
    let dg = gradient_fd(g);
    let dw = gradient_fd(omega);
    let values = (0..omega.len())
        .map(|i| {
            let (gv, w) = (g.values[i], omega.values[i]);
            let gap = mu - gv;
            let dwdt = (st.next.omega_g.values[i] - st.prev.omega_g.values[i]) / st.dt2;
            lap.values[i] - dwdt - sc * 2.0 * (gv - ln_d) / gap * dg.values[i] * dw.values[i] - sq * 2.0 * gap * w * w
                + linear * w
                + 2.0 * a * gv / gap * w
        })
        .collect();
    Ok(Field { grid: omega.grid, values, time: omega.time })
}

/// `min (κ² − g²/(μ−g)²)` over every node of every frame; non-negative
/// whenever `u ≤ D`.
pub fn base_estimate_margin(solution: &Solution, consts: &EstimateConstants) -> Result<f64> {
    solution.frames.iter().try_fold(f64::INFINITY, |acc, frame| {
        frame.ensure_positive()?;
        Ok(frame.values.iter().fold(acc, |m, &u| {
            let g = u.ln();
            let q = g / (consts.mu - g);
            m.min(consts.kappa * consts.kappa - q * q)
        }))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Grid;
    use crate::estimates::constants;
    use crate::geometry::ModelSpace;
    use crate::solver::{solve, EvolutionParams};

    fn flat_run(cells: usize, dt: f64, a: f64) -> (Solution, EstimateConstants) {
        let space = ModelSpace::flat(2).unwrap();
        let grid = Grid::radial(6.0, cells).unwrap();
        let u0 = Field::from_fn(grid, 0.0, |r| 0.6 + 0.9 * (-r * r / 2.0).exp()).unwrap();
        let (upper, lower) = (1.5, Some(0.5));
        let p = EvolutionParams::new(a, upper, lower, 0.2, 0.2).unwrap();
        let sol = solve(&space, &u0, &p, dt).unwrap();
        let c = constants(2, 0.0, a, upper, lower).unwrap();
        (sol, c)
    }

    fn worst(sol: &Solution, c: &EstimateConstants, which: u8, mutation: Mutation) -> f64 {
        (1..sol.frames.len() - 1)
            .map(|k| {
                let f = match which {
                    1 => lemma1_residual_with(sol, c, k, mutation),
                    _ => lemma2_residual_with(sol, c, k, mutation),
                };
                interior_min(&f.unwrap())
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn constant_solution_has_zero_residual() {
        let space = ModelSpace::gaussian(3).unwrap();
        let u0 = Field::constant(Grid::radial(4.0, 32).unwrap(), 1.5, 0.0).unwrap();
        let p = EvolutionParams::new(0.0, 1.5, None, 0.1, 0.1).unwrap();
        let sol = solve(&space, &u0, &p, 0.025).unwrap();
        let c = constants(3, 0.0, 0.0, 1.5, None).unwrap();
        for k in 1..sol.frames.len() - 1 {
            for v in lemma1_residual(&sol, &c, k).unwrap().values {
                assert!(v.abs() < 1e-20);
            }
            for v in lemma2_residual(&sol, &c, k).unwrap().values {
                assert!(v.abs() < 1e-20);
            }
        }
        assert!(base_estimate_margin(&sol, &c).unwrap() >= 0.0);
    }

    #[test]
    fn boundary_frames_are_rejected() {
        let (sol, c) = flat_run(32, 0.05, 0.0);
        let last = sol.frames.len() - 1;
        assert!(matches!(lemma1_residual(&sol, &c, 0), Err(LabError::Domain(_))));
        assert!(matches!(lemma2_residual(&sol, &c, last), Err(LabError::Domain(_))));
    }

    #[test]
    fn residual_deficit_shrinks_under_refinement() {
        for which in [1u8, 2] {
            let deficit = |cells, dt| {
                let (sol, c) = flat_run(cells, dt, 0.0);
                (-worst(&sol, &c, which, Mutation::Faithful)).max(0.0)
            };
            let coarse = deficit(48, 0.02);
            let fine = deficit(96, 0.01);
            assert!(fine <= 0.75 * coarse + 1e-12, "lemma {which}: {coarse} → {fine}");
        }
    }

    #[test]
    fn flipped_coupling_is_detected() {
        // narrow bump in the plane: the faithful residual has slack, the
        // mutant goes negative far beyond the discretization tolerance
        let space = ModelSpace::flat(2).unwrap();
        let grid = Grid::radial(3.0, 300).unwrap();
        let u0 = Field::from_fn(grid, 0.0, |r| 0.3 + 0.9 * (-r * r / 0.08).exp()).unwrap();
        let p = EvolutionParams::new(0.0, 1.2, None, 0.05, 0.05).unwrap();
        let sol = solve(&space, &u0, &p, 1e-3).unwrap();
        let c = constants(2, 0.0, 0.0, 1.2, None).unwrap();
        let tol = 10.0 * (grid.spacing + sol.dt);
        for which in [1u8, 2] {
            let honest = worst(&sol, &c, which, Mutation::Faithful);
            let mutant = worst(&sol, &c, which, Mutation::FlipCoupling);
            assert!(honest >= -tol, "lemma {which}: {honest}");
            assert!(mutant < -tol, "lemma {which}: {mutant}");
        }
    }

    #[test]
    fn flipped_quadratic_only_weakens() {
        let (sol, c) = flat_run(48, 0.02, 0.0);
        for which in [1u8, 2] {
            let honest = worst(&sol, &c, which, Mutation::Faithful);
            let mutant = worst(&sol, &c, which, Mutation::FlipQuadratic);
            assert!(mutant >= honest, "lemma {which}");
        }
    }

    #[test]
    fn negative_reaction_uses_lower_branch() {
        let (sol, c) = flat_run(64, 0.01, -0.5);
        assert!(c.lemma1_coefficient().unwrap() < 0.0);
        let w = worst(&sol, &c, 1, Mutation::Faithful);
        assert!(w > -5e-2, "{w}");
    }

    #[test]
    fn base_estimate_holds_on_a_run() {
        let (sol, c) = flat_run(48, 0.02, 0.0);
        assert!(base_estimate_margin(&sol, &c).unwrap() >= 0.0);
    }
}
