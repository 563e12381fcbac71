//! Spectral gap, weighted log-Sobolev constant and the Chung-Yau bounds on
//! weighted circles, plus the Liouville classifier for ancient solutions.
//!
//! Everything on the circle is built from one conservative discretization:
//! the weighted Dirichlet form `E(u) = Σ w_{i+½}(u_{i+1}−u_i)²/h` with
//! `w = e^{−f}` at cell midpoints, and the mass `q_i = h·e^{−f(r_i)}`. The
//! discrete `λ₁` is therefore exactly the minimum of the discrete Rayleigh
//! quotient, and `−Δ_f = Q⁻¹A` is symmetric after conjugation by `Q^{1/2}`
//! (the `e^{−f/2}` symmetrization).

mod chung_yau;
mod liouville;
mod lsi;

pub use chung_yau::{verify_chung_yau, BoundCheck, ChungYauReport};
pub use liouville::{liouville_classify, liouville_ode_gap, Verdict};
pub use lsi::{log_sobolev_constant, spectral_f_laplacian, LogSobolevConfig, LogSobolevResult, Trial, TrialKind};

use crate::discretize::{Field, Grid, GridKind};
use crate::error::{LabError, Result};
use crate::geometry::ModelSpace;
use crate::linalg::Tridiagonal;

/// Default number of cells for circle computations.
pub const DEFAULT_CELLS: usize = 256;

const MAX_ITERATIONS: usize = 5000;

/// First nonzero eigenvalue of `−Δ_f` and the data around it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub lambda1: f64,
    /// Mean zero in `⟨·,·⟩_f`, normalized to `⟨φ,φ⟩_f = V_f`.
    pub eigenfunction: Field,
    /// Diameter, `L/2` on a circle.
    pub diameter: f64,
    /// Weighted volume `V_f`.
    pub volume: f64,
    /// `‖A φ − λ₁ Q φ‖_{Q⁻¹} / ‖φ‖_Q` of the discrete problem.
    pub residual: f64,
    pub iterations: usize,
}

impl SpectralResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambda1": self.lambda1,
            "d": self.diameter,
            "V_f": self.volume,
            "residual": self.residual,
            "iterations": self.iterations,
        })
    }
}

/// Stiffness `A` (cyclic) and lumped mass `q` of the weighted Dirichlet form.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DirichletForm {
    pub grid: Grid,
    pub stiffness: Tridiagonal,
    pub mass: Vec<f64>,
}

impl DirichletForm {
    pub fn new(space: &ModelSpace, cells: usize) -> Result<Self> {
        let length = circle_length(space)?;
        let grid = Grid::periodic(length, cells)?;
        let h = grid.spacing;
        let n = grid.len();
        let weight = |r: f64| (-space.weight_at(r).value).exp();
        let mid: Vec<f64> = (0..n).map(|i| weight(grid.node(i) + 0.5 * h) / h).collect();
        let mut a = Tridiagonal::zeros(n);
        for i in 0..n {
            let left = mid[(i + n - 1) % n];
            a.diag[i] = left + mid[i];
            a.upper[i] = -mid[i];
            a.lower[i] = -left;
        }
        let mass = (0..n).map(|i| h * weight(grid.node(i))).collect();
        Ok(Self { grid, stiffness: a, mass })
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let au = self.stiffness.apply_cyclic(u);
        u.iter().zip(&au).map(|(x, y)| x * y).sum()
    }

    /// `Σ w_{i+½}(v_{i+1} − v_i)²/h`, the same form as `vᵀAv` without the
    /// cancellation of the row sums.
    pub fn energy_of_differences(&self, v: &[f64]) -> f64 {
        let n = v.len();
        (0..n)
            .map(|i| {
                let d = v[(i + 1) % n] - v[i];
                -self.stiffness.upper[i] * d * d
            })
            .sum()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u.iter().zip(v)).map(|(q, (x, y))| q * x * y).sum()
    }

    pub fn volume(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Removes the `⟨·,1⟩_f` component.
    pub fn deflate(&self, u: &mut [f64]) {
        let mean = self.inner(u, &vec![1.0; u.len()]) / self.volume();
        u.iter_mut().for_each(|x| *x -= mean);
    }

    /// Solves `(A + σQ) x = rhs`.
    pub fn shifted_solve(&self, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut m = self.stiffness.clone();
        for (d, q) in m.diag.iter_mut().zip(&self.mass) {
            *d += sigma * q;
        }
        m.solve_cyclic(rhs)
    }
}

pub(crate) fn circle_length(space: &ModelSpace) -> Result<f64> {
    match space.circumference {
        Some(l) if space.is_circle() => Ok(l),
        _ => Err(LabError::Domain(format!("spectral and log-Sobolev computations need a circle, got {}", space.kind))),
    }
}

/// Smallest nonzero eigenvalue of `−Δ_f` on a circle with [`DEFAULT_CELLS`] cells.
pub fn lambda1(space: &ModelSpace) -> Result<SpectralResult> {
    lambda1_with(space, DEFAULT_CELLS)
}

/// Shifted inverse iteration on the complement of the constants.
pub fn lambda1_with(space: &ModelSpace, cells: usize) -> Result<SpectralResult> {
    let form = DirichletForm::new(space, cells)?;
    let grid = form.grid;
    let length = grid.extent();
    let n = grid.len();
    // a shift well below the flat-circle gap keeps A + σQ definite and the
    // contraction ratio (λ₁+σ)/(λ₂+σ) small
    let sigma = (std::f64::consts::PI / length).powi(2);
    let mut phi: Vec<f64> = (0..n)
        .map(|i| {
            let x = std::f64::consts::TAU * grid.node(i) / length;
            x.cos() + 0.5 * x.sin() + 0.1 * (2.0 * x).cos()
        })
        .collect();
    form.deflate(&mut phi);
    normalize(&form, &mut phi);
    let mut lambda = rayleigh(&form, &phi);
    let mut settled = 0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let rhs: Vec<f64> = phi.iter().zip(&form.mass).map(|(p, q)| p * q).collect();
        let mut next = form.shifted_solve(sigma, &rhs)?;
        form.deflate(&mut next);
        normalize(&form, &mut next);
        phi = next;
        let updated = rayleigh(&form, &phi);
        if (updated - lambda).abs() <= 1e-14 * updated.abs() {
            settled += 1;
            if settled >= 3 {
                lambda = updated;
                break;
            }
        } else {
            settled = 0;
        }
        lambda = updated;
    }
    if settled < 3 {
        return Err(LabError::Numeric(format!("inverse iteration did not converge in {MAX_ITERATIONS} steps")));
    }
    if !(lambda > 0.0) {
        return Err(LabError::Numeric(format!("first nonzero eigenvalue {lambda} is not positive")));
    }
    let volume = form.volume();
    // fix the scale to ⟨φ,φ⟩_f = V_f and the sign to a positive value at r = 0
    let scale = volume.sqrt() * if phi[0] < 0.0 { -1.0 } else { 1.0 };
    phi.iter_mut().for_each(|p| *p *= scale);
    let residual = eigen_residual(&form, &phi, lambda);
    Ok(SpectralResult {
        lambda1: lambda,
        eigenfunction: Field::new(grid, phi, 0.0)?,
        diameter: length / 2.0,
        volume,
        residual,
        iterations,
    })
}

/// Discrete Rayleigh quotient `E(φ)/⟨φ,φ⟩_f`.
pub fn rayleigh_quotient(space: &ModelSpace, field: &Field) -> Result<f64> {
    if field.grid.kind != GridKind::Periodic {
        return Err(LabError::Domain("Rayleigh quotient is defined on circle grids".into()));
    }
    let form = DirichletForm::new(space, field.grid.cells)?;
    if form.grid != field.grid {
        return Err(LabError::Shape("field grid does not cover the circle".into()));
    }
    Ok(rayleigh(&form, &field.values))
}

fn rayleigh(form: &DirichletForm, u: &[f64]) -> f64 {
    form.energy(u) / form.inner(u, u)
}

fn normalize(form: &DirichletForm, u: &mut [f64]) {
    let norm = form.inner(u, u).sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
}

fn eigen_residual(form: &DirichletForm, phi: &[f64], lambda: f64) -> f64 {
    let au = form.stiffness.apply_cyclic(phi);
    let num: f64 = au
        .iter()
        .zip(phi.iter().zip(&form.mass))
        .map(|(a, (p, q))| {
            let r = a - lambda * q * p;
            r * r / q
        })
        .sum();
    (num / form.inner(phi, phi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn circle(length: f64) -> ModelSpace {
        ModelSpace::circle(length).unwrap()
    }

    fn weighted(c: f64) -> ModelSpace {
        circle(2.0 * PI).with_weight(Profile::Cosine { amplitude: c, wavenumber: 1.0 }).unwrap()
    }

    /// Second-smallest eigenvalue of `Q^{-1/2} A Q^{-1/2}` from a dense solve.
    fn dense_lambda1(space: &ModelSpace, cells: usize) -> f64 {
        let form = DirichletForm::new(space, cells).unwrap();
        let n = form.grid.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let s: Vec<f64> = form.mass.iter().map(|q| 1.0 / q.sqrt()).collect();
        for i in 0..n {
            m[(i, i)] = form.stiffness.diag[i] * s[i] * s[i];
            let j = (i + 1) % n;
            m[(i, j)] = form.stiffness.upper[i] * s[i] * s[j];
            m[(j, i)] = m[(i, j)];
        }
        let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(eig[0].abs() < 1e-10);
        eig[1]
    }

    #[test]
    fn flat_circle_spectrum() {
        let res = lambda1(&circle(2.0 * PI)).unwrap();
        assert!((res.lambda1 - 1.0).abs() <= 1e-4, "{}", res.lambda1);
        assert_eq!(res.diameter, PI);
        assert!((res.volume - 2.0 * PI).abs() <= 1e-8);
        let half = lambda1(&circle(PI)).unwrap();
        assert!((half.lambda1 - 4.0).abs() <= 4e-4, "{}", half.lambda1);
    }

    #[test]
    fn matches_dense_eigensolver() {
        for space in [circle(2.0 * PI), circle(3.0), weighted(0.4), weighted(1.5)] {
            let ours = lambda1_with(&space, 64).unwrap().lambda1;
            let dense = dense_lambda1(&space, 64);
            assert!((ours - dense).abs() <= 1e-10 * dense, "{ours} vs {dense}");
        }
    }

    #[test]
    fn eigenfunction_is_mean_zero_and_normalized() {
        let space = weighted(0.7);
        let res = lambda1(&space).unwrap();
        let form = DirichletForm::new(&space, DEFAULT_CELLS).unwrap();
        let phi = &res.eigenfunction.values;
        assert!(form.inner(phi, &vec![1.0; phi.len()]).abs() <= 1e-8);
        assert!((form.inner(phi, phi) - res.volume).abs() <= 1e-9 * res.volume);
        assert!(res.residual <= 1e-8, "{}", res.residual);
    }

    #[test]
    fn small_weight_perturbation_is_continuous() {
        let base = lambda1(&weighted(0.0)).unwrap().lambda1;
        let mut last = f64::INFINITY;
        for c in [0.2, 0.1, 0.05, 0.025] {
            let gap = (lambda1(&weighted(c)).unwrap().lambda1 - base).abs();
            assert!(gap <= 2.0 * c, "c={c}: {gap}");
            assert!(gap <= last);
            last = gap;
        }
    }

    #[test]
    fn rayleigh_bound_over_random_trials() {
        let space = weighted(0.5);
        let res = lambda1(&space).unwrap();
        let form = DirichletForm::new(&space, DEFAULT_CELLS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut u: Vec<f64> = (0..form.grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // mix in smooth content so trials are not all high-frequency
            let k = rng.gen_range(1..4) as f64;
            for (i, x) in u.iter_mut().enumerate() {
                *x = 0.2 * *x + (k * form.grid.node(i)).sin();
            }
            form.deflate(&mut u);
            assert!(res.lambda1 <= rayleigh(&form, &u) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn radial_spaces_are_rejected() {
        assert!(matches!(lambda1(&ModelSpace::flat(2).unwrap()), Err(LabError::Domain(_))));
    }
}
