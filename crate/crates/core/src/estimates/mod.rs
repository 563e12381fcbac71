//! Quantitative checks of the gradient estimates against solved fields.
//!
//! The universal constant `c(n)` of both estimates is never assumed: the
//! reports measure the largest ratio of the left side to the bracket with
//! `c(n)` factored out, and callers test how stable that ratio is.

mod bochner;
mod cutoff;
mod lemmas;

pub use bochner::{bochner_residual, BochnerResidual};
pub use cutoff::{cutoff_build, cutoff_verify, CutoffJet, CutoffProfile, DEFAULT_CUTOFF_SAMPLES};
pub use lemmas::{
    base_estimate_margin, interior_min, lemma1_residual, lemma1_residual_with, lemma2_residual, lemma2_residual_with,
    Mutation,
};

use serde::{Deserialize, Serialize};

use crate::discretize::{gradient_fd, GridKind};
use crate::error::{LabError, Result};
use crate::geometry::CurvatureBounds;
use crate::solver::{EvolutionParams, Solution, AUDIT_TOLERANCE};

/// Samples used when re-certifying the curvature hypothesis on `[0, R]`.
const CERTIFY_SAMPLES: usize = 2000;

/// Derived constants of both estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConstants {
    pub n: usize,
    pub k: f64,
    pub a: f64,
    pub upper: f64,
    pub lower: Option<f64>,
    /// `max{2(n−1)K + a(2 + ln D), 0}`.
    pub c1: f64,
    /// `max{2(n−1)K + a(2 + ln δ), 0}`; present whenever `δ` is.
    pub c2: Option<f64>,
    /// `max{a + (n−1)K, 0}`.
    pub c3: f64,
    /// `max{|ln D|, 1}`.
    pub kappa: f64,
    /// `1 + ln D`.
    pub mu: f64,
    /// Measured ratio from the most recent verification, if any.
    pub empirical_cn: Option<f64>,
}

/// Computes the constants; `delta` is required when `a < 0`.
pub fn constants(n: usize, k: f64, a: f64, upper: f64, delta: Option<f64>) -> Result<EstimateConstants> {
    if n == 0 {
        return Err(LabError::Parameter("dimension n must be ≥ 1".into()));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(LabError::Parameter(format!("K must be finite and ≥ 0, got {k}")));
    }
    if !a.is_finite() {
        return Err(LabError::Parameter(format!("a must be finite, got {a}")));
    }
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(LabError::Parameter(format!("D must be positive, got {upper}")));
    }
    if let Some(d) = delta {
        if !(d > 0.0 && d <= upper) {
            return Err(LabError::Parameter(format!("δ must lie in (0, D], got {d}")));
        }
    } else if a < 0.0 {
        return Err(LabError::Parameter("δ is required when a < 0".into()));
    }
    let ricci = 2.0 * (n - 1) as f64 * k;
    let ln_d = upper.ln();
    Ok(EstimateConstants {
        n,
        k,
        a,
        upper,
        lower: delta,
        c1: (ricci + a * (2.0 + ln_d)).max(0.0),
        c2: delta.map(|d| (ricci + a * (2.0 + d.ln())).max(0.0)),
        c3: (a + (n - 1) as f64 * k).max(0.0),
        kappa: ln_d.abs().max(1.0),
        mu: 1.0 + ln_d,
        empirical_cn: None,
    })
}

impl EstimateConstants {
    /// Constants matching a curvature certificate and evolution parameters.
    pub fn for_problem(n: usize, bounds: &CurvatureBounds, params: &EvolutionParams) -> Result<Self> {
        constants(n, bounds.k, params.a, params.upper, params.lower)
    }

    /// The constant under the square root in the Hamilton bracket: `c₁` for
    /// `a ≥ 0`, `c₂` otherwise.
    pub fn hamilton_c(&self) -> Result<f64> {
        if self.a >= 0.0 {
            Ok(self.c1)
        } else {
            self.c2.ok_or_else(|| LabError::Parameter("δ is required when a < 0".into()))
        }
    }

    /// Unclamped `2(n−1)K + a·ln(D or δ) + 2a`, the linear coefficient of the
    /// `ω_h` inequality. Equal to the expression inside `c₁` (or `c₂`) before
    /// the `max{·, 0}`.
    pub fn lemma1_coefficient(&self) -> Result<f64> {
        let level = if self.a >= 0.0 {
            self.upper
        } else {
            self.lower.ok_or_else(|| LabError::Parameter("δ is required when a < 0".into()))?
        };
        Ok(2.0 * (self.n - 1) as f64 * self.k + self.a * level.ln() + 2.0 * self.a)
    }

    /// `a + (n−1)K`, the linear coefficient of the `ω_g` inequality (unclamped `c₃`).
    pub fn lemma2_coefficient(&self) -> f64 {
        self.a + (self.n - 1) as f64 * self.k
    }
}

fn elapsed(params: &EvolutionParams, t: f64) -> Result<f64> {
    let s = t - params.start();
    if !(s > 0.0) {
        return Err(LabError::Domain(format!(
            "estimates exclude the initial slice: t = {t} is not after t₀ − T = {}",
            params.start()
        )));
    }
    Ok(s)
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius >= 2.0 && radius.is_finite()) {
        return Err(LabError::Parameter(format!("estimate radius R must be ≥ 2, got {radius}")));
    }
    Ok(())
}

/// `√D(1/R + √(|α|/R) + 1/√(t−t₀+T) + √K + √c)` with `c = c₁` (a ≥ 0) or `c₂`.
pub fn hamilton_rhs_bracket(
    bounds: &CurvatureBounds,
    params: &EvolutionParams,
    consts: &EstimateConstants,
    t: f64,
) -> Result<f64> {
    check_radius(bounds.radius)?;
    let s = elapsed(params, t)?;
    let r = bounds.radius;
    let c = consts.hamilton_c()?;
    Ok(consts.upper.sqrt() * (1.0 / r + (bounds.alpha.abs() / r).sqrt() + 1.0 / s.sqrt() + consts.k.sqrt() + c.sqrt()))
}

/// `(√((1+|α|)/R) + 1/√(t−t₀+T) + √K + tail)(1 + ln(D/u))`, where the tail is
/// `√(a(κ+1))` for `a ≥ 0` and `√c₃ + √(−aκ)` for `a < 0`.
pub fn souplet_zhang_rhs_bracket(
    bounds: &CurvatureBounds,
    params: &EvolutionParams,
    consts: &EstimateConstants,
    u: f64,
    t: f64,
) -> Result<f64> {
    check_radius(bounds.radius)?;
    if !(u > 0.0) {
        return Err(LabError::Domain(format!("u must be positive, got {u}")));
    }
    if u > consts.upper * (1.0 + AUDIT_TOLERANCE) {
        return Err(LabError::BoundAudit(format!("u = {u} exceeds D = {}", consts.upper)));
    }
    let s = elapsed(params, t)?;
    let r = bounds.radius;
    let tail = if consts.a >= 0.0 {
        (consts.a * (consts.kappa + 1.0)).sqrt()
    } else {
        consts.c3.sqrt() + (-consts.a * consts.kappa).sqrt()
    };
    let bracket = ((1.0 + bounds.alpha.abs()) / r).sqrt() + 1.0 / s.sqrt() + consts.k.sqrt() + tail;
    Ok(bracket * (1.0 + (consts.upper / u).ln()))
}

/// Which estimate a report measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Hamilton,
    SoupletZhang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub r: f64,
    pub t: f64,
}

/// The verified region: distance ≤ `radius` and `t ∈ [t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub radius: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub dr: f64,
    pub dt: f64,
}

/// One sampled point of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub r: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs_bracket: f64,
    pub ratio: f64,
}

/// Outcome of one estimate verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub theorem: Theorem,
    pub ratio_max: f64,
    pub argmax: SpaceTimePoint,
    pub empirical_cn: f64,
    pub window: Window,
    pub grid: Spacing,
    pub constants: EstimateConstants,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<EstimateRow>,
}

impl EstimateReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theorem": self.theorem,
            "ratio_max": self.ratio_max,
            "argmax": self.argmax,
            "empirical_cn": self.empirical_cn,
            "window": self.window,
            "grid": self.grid,
            "constants": self.constants,
            "notes": self.notes,
        })
    }

    /// Nodewise rows as `r,t,lhs,rhs_bracket,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,t,lhs,rhs_bracket,ratio\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", row.r, row.t, row.lhs, row.rhs_bracket, row.ratio));
        }
        out
    }
}

/// Largest usable estimate radius for a solution's grid.
pub fn domain_radius(solution: &Solution) -> f64 {
    let grid = solution.grid();
    match grid.kind {
        GridKind::Radial => grid.extent(),
        GridKind::Periodic => grid.extent() / 2.0,
    }
}

/// Measures `max |∇u|/√u ÷ bracket` over `Q_{R/2,T}` without the initial slice.
pub fn verify_hamilton(solution: &Solution, bounds: &CurvatureBounds) -> Result<EstimateReport> {
    verify(solution, bounds, Theorem::Hamilton)
}

/// Measures `max |∇u|/u ÷ bracket` over `Q_{R/2,T}` without the initial slice.
pub fn verify_souplet_zhang(solution: &Solution, bounds: &CurvatureBounds) -> Result<EstimateReport> {
    verify(solution, bounds, Theorem::SoupletZhang)
}

fn verify(solution: &Solution, bounds: &CurvatureBounds, theorem: Theorem) -> Result<EstimateReport> {
    solution.audit()?;
    check_radius(bounds.radius)?;
    let available = domain_radius(solution);
    if bounds.radius > available * (1.0 + 1e-12) {
        return Err(LabError::Parameter(format!(
            "estimate radius {} exceeds the computed domain radius {available}",
            bounds.radius
        )));
    }
    // the curvature hypothesis must hold on B(x₀, R), whatever the caller claims
    let certified = CurvatureBounds::certify(&solution.space, bounds.k, bounds.radius, CERTIFY_SAMPLES)?;
    if (certified.alpha - bounds.alpha).abs() > 1e-9 * (1.0 + bounds.alpha.abs()) {
        return Err(LabError::Precondition(format!(
            "declared α = {} does not match Δ_f r = {} on the unit sphere",
            bounds.alpha, certified.alpha
        )));
    }
    let params = &solution.params;
    let mut consts = EstimateConstants::for_problem(solution.space.n, bounds, params)?;
    let grid = solution.grid();
    let half = bounds.radius / 2.0;
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| grid.distance(i) <= half * (1.0 + 1e-12)).collect();

    let mut rows = Vec::new();
    for frame in solution.frames.iter().skip(1) {
        let du = gradient_fd(frame);
        for &i in &nodes {
            let u = frame.values[i];
            let slope = du.values[i].abs();
            let (lhs, rhs) = match theorem {
                Theorem::Hamilton => (slope / u.sqrt(), hamilton_rhs_bracket(bounds, params, &consts, frame.time)?),
                Theorem::SoupletZhang => {
                    (slope / u, souplet_zhang_rhs_bracket(bounds, params, &consts, u, frame.time)?)
                }
            };
            if !(rhs > 0.0) {
                return Err(LabError::Numeric(format!("bracket {rhs} is not positive at r = {}", grid.node(i))));
            }
            rows.push(EstimateRow { r: grid.node(i), t: frame.time, lhs, rhs_bracket: rhs, ratio: lhs / rhs });
        }
    }
    let best = rows
        .iter()
        .copied()
        .fold(None::<EstimateRow>, |acc, row| match acc {
            Some(b) if b.ratio >= row.ratio => Some(b),
            _ => Some(row),
        })
        .ok_or_else(|| {
            LabError::Domain("the verification window contains no samples; need at least two frames".into())
        })?;

    let mut notes = Vec::new();
    if consts.a == 0.0 && consts.k == 0.0 {
        notes.push("a = 0 and K = 0: the curvature and reaction tail terms vanish".into());
    } else if consts.a == 0.0 {
        notes.push("a = 0: the reaction tail term vanishes".into());
    }
    consts.empirical_cn = Some(best.ratio);
    Ok(EstimateReport {
        theorem,
        ratio_max: best.ratio,
        argmax: SpaceTimePoint { r: best.r, t: best.t },
        empirical_cn: best.ratio,
        window: Window { radius: half, t_start: solution.time(1), t_end: params.t0 },
        grid: Spacing { dr: grid.spacing, dt: solution.dt },
        constants: consts,
        notes,
        rows,
    })
}
