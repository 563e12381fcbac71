//! Time integration of `∂u/∂t = Δ_f u + a·u·ln u`.
//!
//! Each step advances the reaction explicitly and then solves the diffusion
//! implicitly (backward Euler, one tridiagonal solve). A step that would make
//! any nodal value non-positive is discarded and retried as two half steps;
//! values are never clamped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretize::{f_laplacian_matrix, gradient_fd, Field, Grid, GridKind, OuterBoundary};
use crate::error::{LabError, Result};
use crate::geometry::ModelSpace;
use crate::linalg::Tridiagonal;

/// Maximum number of successive step halvings before giving up.
pub const MAX_HALVINGS: u32 = 20;

/// Relative slack allowed when auditing realized values against `D` and `δ`.
pub const AUDIT_TOLERANCE: f64 = 1e-8;

/// Coefficients and time window of one evolution problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    /// Nonlinearity coefficient.
    pub a: f64,
    /// Upper bound `D` on the solution.
    pub upper: f64,
    /// Lower bound `δ`, required when `a < 0`.
    pub lower: Option<f64>,
    pub t0: f64,
    /// Length `T` of the window `[t₀ − T, t₀]`.
    pub horizon: f64,
    /// Cutoff switch time, `τ ∈ (t₀ − T, t₀]`.
    pub tau: f64,
}

impl EvolutionParams {
    /// Window `[t0 − horizon, t0]` with `τ = t0`.
    pub fn new(a: f64, upper: f64, lower: Option<f64>, t0: f64, horizon: f64) -> Result<Self> {
        let p = Self { a, upper, lower, t0, horizon, tau: t0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau = tau;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.upper > 0.0 && self.upper.is_finite()) {
            return Err(LabError::Parameter(format!("D must be positive, got {}", self.upper)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(LabError::Parameter(format!("T must be positive, got {}", self.horizon)));
        }
        if !self.a.is_finite() || !self.t0.is_finite() {
            return Err(LabError::Parameter("a and t0 must be finite".into()));
        }
        if !(self.tau > self.start() && self.tau <= self.t0) {
            return Err(LabError::Parameter(format!("τ = {} must lie in ({}, {}]", self.tau, self.start(), self.t0)));
        }
        match self.lower {
            Some(d) if !(d > 0.0 && d <= self.upper) => {
                Err(LabError::Parameter(format!("δ = {d} must satisfy 0 < δ ≤ D = {}", self.upper)))
            }
            None if self.a < 0.0 => Err(LabError::Parameter("δ is required when a < 0".into())),
            _ => Ok(()),
        }
    }

    /// `t₀ − T`.
    pub fn start(&self) -> f64 {
        self.t0 - self.horizon
    }
}

/// How the reaction term is advanced within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionScheme {
    ForwardEuler,
    /// Explicit trapezoid (Heun), second order for the pointwise ODE.
    #[default]
    Heun,
}

/// Unknown advanced by the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    #[default]
    Direct,
    /// Advance `g = ln u` through `g_t = Δ_f g + |∇g|² + a g`.
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepConfig {
    pub outer: OuterBoundary,
    pub mode: EvolutionMode,
    pub reaction: ReactionScheme,
}

/// Space-time solution: frames at `t₀ − T + k·Δt`, `k = 0..=T/Δt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub space: ModelSpace,
    pub frames: Vec<Field>,
    pub params: EvolutionParams,
    pub dt: f64,
    pub config: StepConfig,
}

impl Solution {
    /// Wraps precomputed frames without auditing them.
    pub fn from_frames(space: ModelSpace, frames: Vec<Field>, params: EvolutionParams, dt: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(LabError::Shape("a solution needs at least one frame".into()));
        }
        let grid = frames[0].grid;
        if frames.iter().any(|f| f.grid != grid) {
            return Err(LabError::Shape("frames live on different grids".into()));
        }
        Ok(Self { space, frames, params, dt, config: StepConfig::default() })
    }

    pub fn grid(&self) -> Grid {
        self.frames[0].grid
    }

    pub fn time(&self, frame: usize) -> f64 {
        self.frames[frame].time
    }

    pub fn realized_min(&self) -> f64 {
        self.frames.iter().map(Field::min).fold(f64::INFINITY, f64::min)
    }

    pub fn realized_max(&self) -> f64 {
        self.frames.iter().map(Field::max).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Checks positivity and the declared bounds `D` (and `δ` when `a < 0`).
    pub fn audit(&self) -> Result<()> {
        let (lo, hi) = (self.realized_min(), self.realized_max());
        if !(lo > 0.0) {
            return Err(LabError::BoundAudit(format!("solution is not positive (min {lo})")));
        }
        if hi > self.params.upper * (1.0 + AUDIT_TOLERANCE) {
            return Err(LabError::BoundAudit(format!("realized max {hi} exceeds D = {}", self.params.upper)));
        }
        if self.params.a < 0.0 {
            let delta = self.params.lower.ok_or_else(|| LabError::Parameter("δ is required when a < 0".into()))?;
            if lo < delta * (1.0 - AUDIT_TOLERANCE) {
                return Err(LabError::BoundAudit(format!("realized min {lo} is below δ = {delta}")));
            }
        }
        Ok(())
    }

    /// Writes one CSV per frame and `manifest.json` into `dir`.
    pub fn write_archive(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut frames = Vec::with_capacity(self.frames.len());
        for (k, f) in self.frames.iter().enumerate() {
            let name = format!("frame_{k:05}.csv");
            fs::write(dir.join(&name), f.to_csv())?;
            frames.push(serde_json::json!({ "index": k, "time": f.time, "file": name }));
        }
        let manifest = serde_json::json!({
            "space": self.space.describe(),
            "kind": self.space.kind,
            "params": self.params,
            "dt": self.dt,
            "config": self.config,
            "grid": self.grid(),
            "realized_min": self.realized_min(),
            "realized_max": self.realized_max(),
            "frames": frames,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Io(e.to_string()))?;
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Exact spatially constant solution `exp(c·e^{at})`.
pub fn ode_exact(a: f64, c: f64, t: f64) -> Result<f64> {
    let exponent = c * (a * t).exp();
    if exponent.is_nan() {
        return Err(LabError::Saturation(format!("c·e^(at) undefined for a={a}, c={c}, t={t}")));
    }
    if exponent > f64::MAX.ln() {
        return Err(LabError::Saturation(format!("exp({exponent}) overflows")));
    }
    Ok(exponent.exp())
}

/// Implicit diffusion operator `I − dt·A` for one step size.
struct DiffusionSystem {
    operator: Tridiagonal,
    periodic: bool,
    dirichlet: bool,
}

impl DiffusionSystem {
    fn new(space: &ModelSpace, grid: &Grid, outer: OuterBoundary) -> Result<Self> {
        let outer = match outer {
            OuterBoundary::OneSided => {
                return Err(LabError::Parameter("time stepping needs a Neumann or Dirichlet outer boundary".into()))
            }
            o => o,
        };
        Ok(Self {
            operator: f_laplacian_matrix(space, grid, outer)?,
            periodic: grid.kind == GridKind::Periodic,
            dirichlet: outer == OuterBoundary::Dirichlet,
        })
    }

    fn solve(&self, rhs: &[f64], dt: f64) -> Result<Vec<f64>> {
        let a = &self.operator;
        let system = Tridiagonal {
            lower: a.lower.iter().map(|x| -dt * x).collect(),
            diag: a.diag.iter().map(|x| 1.0 - dt * x).collect(),
            upper: a.upper.iter().map(|x| -dt * x).collect(),
        };
        if self.periodic {
            system.solve_cyclic(rhs)
        } else {
            // Dirichlet rows are identity because their operator rows are zero
            debug_assert!(!self.dirichlet || system.diag[rhs.len() - 1] == 1.0);
            system.solve(rhs)
        }
    }
}

fn reaction(a: f64, u: f64) -> f64 {
    a * u * u.ln()
}

/// Outcome of one attempted step: new values or the first non-positive node.
type Attempt = std::result::Result<Vec<f64>, usize>;

fn first_nonpositive(v: &[f64]) -> Option<usize> {
    v.iter().position(|&x| !(x > 0.0 && x.is_finite()))
}

fn attempt_direct(sys: &DiffusionSystem, u: &[f64], dt: f64, a: f64, scheme: ReactionScheme) -> Result<Attempt> {
    let mut star = Vec::with_capacity(u.len());
    for (i, &ui) in u.iter().enumerate() {
        let k1 = reaction(a, ui);
        let next = match scheme {
            ReactionScheme::ForwardEuler => ui + dt * k1,
            ReactionScheme::Heun => {
                let w = ui + dt * k1;
                if !(w > 0.0) {
                    return Ok(Err(i));
                }
                ui + 0.5 * dt * (k1 + reaction(a, w))
            }
        };
        if !(next > 0.0) {
            return Ok(Err(i));
        }
        star.push(next);
    }
    let out = sys.solve(&star, dt)?;
    Ok(match first_nonpositive(&out) {
        Some(i) => Err(i),
        None => Ok(out),
    })
}

fn attempt_log(
    sys: &DiffusionSystem,
    grid: Grid,
    u: &[f64],
    dt: f64,
    a: f64,
    scheme: ReactionScheme,
) -> Result<Attempt> {
    let explicit = |g: &[f64]| -> Vec<f64> {
        let field = Field { grid, values: g.to_vec(), time: 0.0 };
        let grad = gradient_fd(&field);
        g.iter().zip(&grad.values).map(|(gi, di)| di * di + a * gi).collect()
    };
    let g: Vec<f64> = u.iter().map(|x| x.ln()).collect();
    let k1 = explicit(&g);
    let star: Vec<f64> = match scheme {
        ReactionScheme::ForwardEuler => g.iter().zip(&k1).map(|(x, k)| x + dt * k).collect(),
        ReactionScheme::Heun => {
            let w: Vec<f64> = g.iter().zip(&k1).map(|(x, k)| x + dt * k).collect();
            let k2 = explicit(&w);
            g.iter().zip(k1.iter().zip(&k2)).map(|(x, (p, q))| x + 0.5 * dt * (p + q)).collect()
        }
    };
    let g_new = sys.solve(&star, dt)?;
    let out: Vec<f64> = g_new.iter().map(|x| x.exp()).collect();
    Ok(match first_nonpositive(&out) {
        Some(i) => Err(i),
        None => Ok(out),
    })
}

fn advance(
    sys: &DiffusionSystem,
    grid: Grid,
    u: Vec<f64>,
    dt: f64,
    a: f64,
    cfg: &StepConfig,
    depth: u32,
) -> Result<Vec<f64>> {
    let attempt = match cfg.mode {
        EvolutionMode::Direct => attempt_direct(sys, &u, dt, a, cfg.reaction)?,
        EvolutionMode::Logarithmic => attempt_log(sys, grid, &u, dt, a, cfg.reaction)?,
    };
    match attempt {
        Ok(next) => Ok(next),
        Err(node) if depth >= MAX_HALVINGS => Err(LabError::Stability {
            node,
            r: grid.node(node),
            reason: format!("positivity lost after {MAX_HALVINGS} step halvings (dt = {dt:e})"),
        }),
        Err(_) => {
            let half = advance(sys, grid, u, dt / 2.0, a, cfg, depth + 1)?;
            advance(sys, grid, half, dt / 2.0, a, cfg, depth + 1)
        }
    }
}

/// One IMEX step with the default configuration.
pub fn step_imex(space: &ModelSpace, field: &Field, dt: f64, a: f64) -> Result<Field> {
    step_imex_with(space, field, dt, a, &StepConfig::default())
}

pub fn step_imex_with(space: &ModelSpace, field: &Field, dt: f64, a: f64, cfg: &StepConfig) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(LabError::Parameter(format!("dt must be positive, got {dt}")));
    }
    field.ensure_positive()?;
    let sys = DiffusionSystem::new(space, &field.grid, cfg.outer)?;
    let values = advance(&sys, field.grid, field.values.clone(), dt, a, cfg, 0)?;
    Field::new(field.grid, values, field.time + dt)
}

/// Integrates from `t₀ − T` to `t₀`, keeping every step as a frame, then
/// audits the realized range against `D` (and `δ` when `a < 0`).
pub fn solve(space: &ModelSpace, initial: &Field, params: &EvolutionParams, dt: f64) -> Result<Solution> {
    solve_with(space, initial, params, dt, &StepConfig::default())
}

pub fn solve_with(
    space: &ModelSpace,
    initial: &Field,
    params: &EvolutionParams,
    dt: f64,
    cfg: &StepConfig,
) -> Result<Solution> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(LabError::Parameter(format!("dt must be positive, got {dt}")));
    }
    let steps = (params.horizon / dt).round();
    if steps < 1.0 || (steps * dt - params.horizon).abs() > 1e-9 * params.horizon {
        return Err(LabError::Parameter(format!("dt = {dt} does not divide T = {}", params.horizon)));
    }
    initial.ensure_positive()?;
    let sys = DiffusionSystem::new(space, &initial.grid, cfg.outer)?;
    let grid = initial.grid;
    let start = params.start();
    let mut frames = Vec::with_capacity(steps as usize + 1);
    frames.push(Field::new(grid, initial.values.clone(), start)?);
    let mut u = initial.values.clone();
    for k in 1..=steps as usize {
        u = advance(&sys, grid, u, dt, params.a, cfg, 0)?;
        frames.push(Field::new(grid, u.clone(), start + k as f64 * dt)?);
    }
    let solution = Solution { space: space.clone(), frames, params: *params, dt, config: *cfg };
    solution.audit()?;
    Ok(solution)
}

/// `h = u^{1/3}`, `g = ln u`, `ω_h = h|∇h|²`, `ω_g = |∇g|²/(μ−g)²`, `μ = 1 + ln D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub h: Field,
    pub g: Field,
    pub omega_h: Field,
    pub omega_g: Field,
}

pub fn derived_fields(solution: &Solution, frame: usize) -> Result<DerivedFields> {
    let u = solution
        .frames
        .get(frame)
        .ok_or_else(|| LabError::Domain(format!("frame {frame} out of range 0..{}", solution.frames.len())))?;
    derived_from_field(u, solution.params.upper)
}

/// [`derived_fields`] for a single field with upper bound `D`.
pub fn derived_from_field(u: &Field, upper: f64) -> Result<DerivedFields> {
    u.ensure_positive()?;
    let mu = 1.0 + upper.ln();
    let g = u.map(f64::ln);
    if let Some(i) = g.values.iter().position(|&gi| mu - gi < 1.0 - AUDIT_TOLERANCE) {
        return Err(LabError::BoundAudit(format!(
            "μ − g = {} < 1 at node {i}: u = {} exceeds D = {upper}",
            mu - g.values[i],
            u.values[i]
        )));
    }
    let h = u.map(f64::cbrt);
    let dh = gradient_fd(&h);
    let dg = gradient_fd(&g);
    let omega_h = h.zip_with(&dh, |hv, d| hv * d * d)?;
    let omega_g = g.zip_with(&dg, |gv, d| d * d / ((mu - gv) * (mu - gv)))?;
    Ok(DerivedFields { h, g, omega_h, omega_g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::weighted_integral;
    use crate::geometry::ModelSpace;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    fn radial(extent: f64, cells: usize) -> Grid {
        Grid::radial(extent, cells).unwrap()
    }

    #[test]
    fn constant_is_kept_without_reaction() {
        let s = ModelSpace::hyperbolic(3).unwrap();
        let u = Field::constant(radial(5.0, 50), 0.7, 0.0).unwrap();
        let next = step_imex(&s, &u, 0.01, 0.0).unwrap();
        for v in next.values {
            assert_abs_diff_eq!(v, 0.7, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_data_follows_pointwise_ode() {
        let s = ModelSpace::gaussian(2).unwrap();
        let u0 = 0.3;
        let (a, dt) = (1.3, 1e-2);
        let u = Field::constant(radial(4.0, 40), u0, 0.0).unwrap();
        let next = step_imex(&s, &u, dt, a).unwrap();
        let exact = ode_exact(a, u0.ln(), dt).unwrap();
        for v in next.values {
            assert!((v - exact).abs() < 2.0 * dt * dt);
        }
    }

    #[test]
    fn manufactured_ode_endpoint() {
        let s = ModelSpace::flat(1).unwrap();
        let params = EvolutionParams::new(1.0, 1.0, None, 1.0, 1.0).unwrap();
        let init = Field::constant(radial(1.0, 16), (-1.0f64).exp(), 0.0).unwrap();
        let sol = solve(&s, &init, &params, 1e-3).unwrap();
        let end = sol.frames.last().unwrap().values[3];
        assert_abs_diff_eq!(end, (-E).exp(), epsilon = 1e-4);
        assert_abs_diff_eq!((-E).exp(), 0.06598803584531254, epsilon = 1e-15);
    }

    #[test]
    fn forward_euler_reaction_is_first_order() {
        let s = ModelSpace::flat(1).unwrap();
        let cfg = StepConfig { reaction: ReactionScheme::ForwardEuler, ..Default::default() };
        let params = EvolutionParams::new(1.0, 1.0, None, 1.0, 1.0).unwrap();
        let init = Field::constant(radial(1.0, 16), (-2.0f64).exp(), 0.0).unwrap();
        let exact = ode_exact(1.0, -2.0, 1.0).unwrap();
        let err = |dt| {
            let sol = solve_with(&s, &init, &params, dt, &cfg).unwrap();
            (sol.frames.last().unwrap().values[0] - exact).abs()
        };
        let order = (err(2e-3) / err(1e-3)).log2();
        assert!((order - 1.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn one_is_a_fixed_point() {
        let s = ModelSpace::gaussian(3).unwrap();
        for a in [-2.0, 0.0, 0.5, 3.0] {
            let params = EvolutionParams::new(a, 1.0, Some(1.0), 0.0, 0.5).unwrap();
            let init = Field::constant(radial(6.0, 32), 1.0, 0.0).unwrap();
            let sol = solve(&s, &init, &params, 0.05).unwrap();
            assert!(sol.frames.iter().all(|f| f.values.iter().all(|&v| (v - 1.0).abs() < 1e-13)));
        }
    }

    #[test]
    fn negative_a_relaxes_constants_towards_one() {
        let s = ModelSpace::circle(2.0 * PI).unwrap();
        let grid = Grid::periodic(2.0 * PI, 32).unwrap();
        for u0 in [0.2, 3.0] {
            let params = EvolutionParams::new(-1.0, 3.0, Some(0.2), 0.0, 4.0).unwrap();
            let sol = solve(&s, &Field::constant(grid, u0, 0.0).unwrap(), &params, 0.01).unwrap();
            let trace: Vec<f64> = sol.frames.iter().map(|f| f.values[0]).collect();
            let dist: Vec<f64> = trace.iter().map(|v| (v - 1.0).abs()).collect();
            assert!(dist.windows(2).all(|w| w[1] < w[0]));
            let exact = ode_exact(-1.0, u0.ln(), 4.0).unwrap();
            assert!((trace.last().unwrap() - exact).abs() < 1e-5);
        }
    }

    #[test]
    fn heat_flow_conserves_weighted_mass() {
        let s = ModelSpace::gaussian(2).unwrap();
        let mass_drift = |cells: usize, dt: f64| {
            let grid = radial(10.0, cells);
            let init = Field::from_fn(grid, 0.0, |r| 1.0 + (-(r - 1.5) * (r - 1.5) * 2.0).exp()).unwrap();
            let params = EvolutionParams::new(0.0, 2.0, None, 0.0, 0.5).unwrap();
            let sol = solve(&s, &init, &params, dt).unwrap();
            let m0 = weighted_integral(&s, &sol.frames[0]).unwrap();
            let m1 = weighted_integral(&s, sol.frames.last().unwrap()).unwrap();
            ((m1 - m0) / m0).abs()
        };
        let coarse = mass_drift(100, 0.01);
        let fine = mass_drift(200, 0.005);
        assert!(coarse < 1e-3, "coarse drift {coarse}");
        assert!(fine < coarse, "fine {fine} coarse {coarse}");
    }

    #[test]
    fn linear_flow_preserves_order() {
        let s = ModelSpace::hyperbolic(2).unwrap();
        let grid = radial(6.0, 60);
        let params = EvolutionParams::new(0.0, 3.0, None, 0.0, 1.0).unwrap();
        let lo = Field::from_fn(grid, 0.0, |r| 1.0 + 0.5 * (-r * r).exp()).unwrap();
        let hi = Field::from_fn(grid, 0.0, |r| 1.2 + 0.5 * (-r * r).exp() + 0.3 * (-(r - 2.0).powi(2)).exp()).unwrap();
        let a = solve(&s, &lo, &params, 0.02).unwrap();
        let b = solve(&s, &hi, &params, 0.02).unwrap();
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert!(x.values.iter().zip(&y.values).all(|(p, q)| *p <= q + 1e-9));
        }
    }

    #[test]
    fn understated_bound_fails_audit() {
        let s = ModelSpace::flat(2).unwrap();
        let grid = radial(4.0, 40);
        let init = Field::from_fn(grid, 0.0, |r| 1.0 + (-r * r).exp()).unwrap();
        let params = EvolutionParams::new(0.0, 1.5, None, 0.0, 0.1).unwrap();
        assert!(matches!(solve(&s, &init, &params, 0.01), Err(LabError::BoundAudit(_))));
    }

    #[test]
    fn step_halving_rescues_positivity() {
        let s = ModelSpace::flat(1).unwrap();
        let grid = radial(1.0, 16);
        // a·dt·ln u = 2·1·(−5) drives an undivided explicit step negative
        let u = Field::constant(grid, (-5.0f64).exp(), 0.0).unwrap();
        let cfg = StepConfig { reaction: ReactionScheme::ForwardEuler, ..Default::default() };
        let next = step_imex_with(&s, &u, 1.0, 2.0, &cfg).unwrap();
        assert!(next.min() > 0.0);
        assert!(next.max() < u.min());
    }

    #[test]
    fn unrecoverable_positivity_is_a_stability_error() {
        let s = ModelSpace::flat(1).unwrap();
        let grid = radial(1.0, 16);
        let u = Field::constant(grid, 1e-300, 0.0).unwrap();
        let cfg = StepConfig { reaction: ReactionScheme::ForwardEuler, ..Default::default() };
        match step_imex_with(&s, &u, 1e6, 1e6, &cfg) {
            Err(LabError::Stability { node, .. }) => assert_eq!(node, 0),
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    #[test]
    fn logarithmic_mode_agrees_with_direct_mode() {
        let s = ModelSpace::gaussian(2).unwrap();
        let grid = radial(8.0, 80);
        let init = Field::from_fn(grid, 0.0, |r| 0.5 + 0.4 * (-r * r / 2.0).exp()).unwrap();
        let params = EvolutionParams::new(0.5, 1.0, None, 0.0, 0.5).unwrap();
        let direct = solve(&s, &init, &params, 0.005).unwrap();
        let cfg = StepConfig { mode: EvolutionMode::Logarithmic, ..Default::default() };
        let log = solve_with(&s, &init, &params, 0.005, &cfg).unwrap();
        let a = direct.frames.last().unwrap();
        let b = log.frames.last().unwrap();
        for (x, y) in a.values.iter().zip(&b.values).take(60) {
            assert!((x - y).abs() < 5e-3, "{x} vs {y}");
        }
    }

    #[test]
    fn ode_exact_values() {
        for a in [-3.0, 0.0, 2.0] {
            assert_eq!(ode_exact(a, 0.0, 7.0).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(ode_exact(1.0, -1.0, 0.0).unwrap(), 0.36787944117144233, epsilon = 1e-15);
        assert!((ode_exact(1.0, -3.0, -40.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(matches!(ode_exact(1.0, 1.0, 10.0), Err(LabError::Saturation(_))));
    }

    #[test]
    fn derived_fields_of_upper_constant() {
        let s = ModelSpace::flat(2).unwrap();
        let grid = radial(2.0, 20);
        let d = 3.0;
        let params = EvolutionParams::new(0.0, d, None, 0.0, 0.1).unwrap();
        let sol = solve(&s, &Field::constant(grid, d, 0.0).unwrap(), &params, 0.05).unwrap();
        let df = derived_fields(&sol, 1).unwrap();
        assert!(df.omega_h.values.iter().all(|&v| v.abs() < 1e-26));
        assert!(df.omega_g.values.iter().all(|&v| v.abs() < 1e-26));
        assert_abs_diff_eq!(df.h.values[0], d.cbrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(df.g.values[0], d.ln(), epsilon = 1e-13);
        assert!(derived_fields(&sol, 5).is_err());
    }

    #[test]
    fn mu_minus_g_is_one_at_the_bound() {
        let grid = radial(2.0, 20);
        let u = Field::constant(grid, (-2.0f64).exp(), 0.0).unwrap();
        let df = derived_from_field(&u, (-2.0f64).exp()).unwrap();
        let mu = 1.0 + (-2.0f64);
        assert!(df.g.values.iter().all(|&g| mu - g == 1.0));
        assert!(matches!(derived_from_field(&u, (-2.5f64).exp()), Err(LabError::BoundAudit(_))));
    }

    #[test]
    fn omega_g_matches_symbolic_derivative() {
        // u = exp(sin r), D = e: g = sin r, μ = 2, ω_g = cos²r / (2 − sin r)²
        let grid = Grid::periodic(2.0 * PI, 400).unwrap();
        let u = Field::from_fn(grid, 0.0, |r| r.sin().exp()).unwrap();
        let df = derived_from_field(&u, E).unwrap();
        for (i, w) in df.omega_g.values.iter().enumerate() {
            let r = grid.node(i);
            let exact = r.cos().powi(2) / (2.0 - r.sin()).powi(2);
            assert!((w - exact).abs() < 1e-4);
        }
        assert_abs_diff_eq!(df.omega_g.values[0], 0.25, epsilon = 1e-4);
    }

    #[test]
    fn params_validation() {
        assert!(EvolutionParams::new(-1.0, 1.0, None, 0.0, 1.0).is_err());
        assert!(EvolutionParams::new(-1.0, 1.0, Some(2.0), 0.0, 1.0).is_err());
        assert!(EvolutionParams::new(1.0, 0.0, None, 0.0, 1.0).is_err());
        let p = EvolutionParams::new(1.0, 1.0, None, 2.0, 1.0).unwrap();
        assert!(p.with_tau(1.0).is_err());
        assert!(p.with_tau(1.5).is_ok());
        let s = ModelSpace::flat(1).unwrap();
        let init = Field::constant(radial(1.0, 16), 0.5, 0.0).unwrap();
        assert!(solve(&s, &init, &p, 0.3).is_err());
    }
}
