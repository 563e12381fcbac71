//! One function per verification. Each turns an [`ExperimentConfig`] into a
//! [`CheckOutcome`]; library errors become a failed outcome rather than
//! aborting the campaign.

use std::collections::BTreeMap;

use fheat_core::discretize::{Field, Grid};
use fheat_core::estimates::{
    base_estimate_margin, bochner_residual, constants, cutoff_build, interior_min, lemma1_residual_with,
    lemma2_residual_with, verify_hamilton, verify_souplet_zhang, EstimateConstants, EstimateReport, Mutation,
};
use fheat_core::geometry::{comparison_check, CurvatureBounds};
use fheat_core::logsobolev::{
    liouville_classify, liouville_ode_gap, log_sobolev_constant, verify_chung_yau, LogSobolevConfig,
};
use fheat_core::solver::{ode_exact, solve_with, Solution};
use fheat_core::{LabError, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Check, ExperimentConfig, InitialData, Level};

/// Samples used when certifying curvature and sampling `Δ_f r`.
const CURVATURE_SAMPLES: usize = 2000;
/// Relative change of `empirical_cn` allowed under one refinement.
pub const CN_STABILITY: f64 = 0.2;
/// Relative change of `ratio_max` allowed under `u → λu` at `a = 0`.
pub const SCALE_TOLERANCE: f64 = 1e-8;
/// Values below this count as zero when forming relative changes; a
/// constant solution's ratio is rounding noise, not a quantity to compare.
const NEGLIGIBLE: f64 = 1e-12;
/// Lemma residual tolerance per unit of `Δr + Δt`.
pub const LEMMA_TOLERANCE_FACTOR: f64 = 10.0;
/// Bochner `m`-form margin tolerance per unit of `Δr²`.
pub const BOCHNER_MARGIN_FACTOR: f64 = 10.0;
/// Accepted measured order of the Bochner equality residual.
pub const BOCHNER_ORDER: (f64, f64) = (1.5, 2.5);
pub const COMPARISON_TOLERANCE: f64 = 1e-8;
/// Largest spread of the fitted `C_ε` across radii.
pub const CUTOFF_SPREAD: f64 = 0.1;
pub const MANUFACTURED_TOLERANCE: f64 = 1e-4;
pub const MANUFACTURED_ORDER: f64 = 0.9;
/// Smallest accepted refinement order of the Euler-Lagrange residual.
pub const EULER_LAGRANGE_ORDER: f64 = 1.0;
pub const ODE_GAP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub cells: usize,
    pub dr: f64,
    pub dt: Option<f64>,
    pub value: f64,
    /// `ln(|v_prev|/|v|) / ln(h_prev/h)` along the table's axis.
    pub order: Option<f64>,
    pub relative_change: Option<f64>,
}

/// A quantity tracked across refinement levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub quantity: String,
    pub axis: Axis,
    pub rows: Vec<RefinementRow>,
}

impl RefinementTable {
    pub fn new(quantity: impl Into<String>, axis: Axis, points: &[(Level, f64, f64)]) -> Self {
        let mut rows: Vec<RefinementRow> = Vec::with_capacity(points.len());
        for &(level, dr, value) in points {
            let h = match axis {
                Axis::Space => Some(dr),
                Axis::Time => level.dt,
            };
            let (order, relative_change) = match rows.last() {
                None => (None, None),
                Some(prev) => {
                    let h_prev = match axis {
                        Axis::Space => Some(prev.dr),
                        Axis::Time => prev.dt,
                    };
                    let order = match (h_prev, h) {
                        (Some(hp), Some(h)) if hp != h && prev.value.abs() > 0.0 && value.abs() > 0.0 => {
                            Some((prev.value.abs() / value.abs()).ln() / (hp / h).ln())
                        }
                        _ => None,
                    };
                    (order, Some((value - prev.value).abs() / prev.value.abs().max(NEGLIGIBLE)))
                }
            };
            rows.push(RefinementRow { cells: level.cells, dr, dt: level.dt, value, order, relative_change });
        }
        Self { quantity: quantity.into(), axis, rows }
    }

    pub fn orders(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().filter_map(|r| r.order)
    }

    pub fn min_order(&self) -> Option<f64> {
        self.orders().reduce(f64::min)
    }

    pub fn last_relative_change(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.relative_change)
    }

    pub fn last_value(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.value)
    }
}

/// A file written into the experiment's output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub passed: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<RefinementTable>,
    pub detail: serde_json::Value,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub files: Vec<Artifact>,
}

impl CheckOutcome {
    fn new(check: Check) -> Self {
        Self {
            check,
            passed: false,
            summary: String::new(),
            metrics: BTreeMap::new(),
            tables: Vec::new(),
            detail: serde_json::Value::Null,
            artifacts: Vec::new(),
            error: None,
            files: Vec::new(),
        }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn file(&mut self, name: String, contents: String) {
        self.artifacts.push(name.clone());
        self.files.push(Artifact { file: name, contents });
    }
}

/// Solutions at every refinement level, shared by the solver-based checks.
pub struct Solved {
    pub levels: Vec<(Level, Result<Solution>)>,
}

impl Solved {
    pub fn compute(exp: &ExperimentConfig) -> Self {
        let levels = exp.levels.iter().map(|&level| (level, solve_level(exp, level, 1.0))).collect();
        Self { levels }
    }

    fn all(&self) -> Result<Vec<(Level, &Solution)>> {
        self.levels.iter().map(|(level, s)| s.as_ref().map(|s| (*level, s)).map_err(Clone::clone)).collect()
    }
}

fn grid(exp: &ExperimentConfig, cells: usize) -> Result<Grid> {
    Grid::for_space(&exp.space, exp.extent.unwrap_or(0.0), cells)
}

fn initial(exp: &ExperimentConfig) -> Result<InitialData> {
    exp.initial.ok_or_else(|| LabError::Parameter("initial data is not configured".into()))
}

/// Solves one level with the initial data and bounds multiplied by `scale`.
fn solve_level(exp: &ExperimentConfig, level: Level, scale: f64) -> Result<Solution> {
    let mut params = exp.params.ok_or_else(|| LabError::Parameter("evolution parameters are not configured".into()))?;
    params.upper *= scale;
    params.lower = params.lower.map(|d| d * scale);
    let data = initial(exp)?.scaled(scale);
    let dt = level.dt.ok_or_else(|| LabError::Parameter("dt is not configured".into()))?;
    let u0 = Field::from_fn(grid(exp, level.cells)?, params.start(), |r| data.eval(r))?;
    solve_with(&exp.space, &u0, &params, dt, &exp.step)
}

pub fn run_check(check: Check, exp: &ExperimentConfig, solved: Option<&Solved>, seed: u64) -> CheckOutcome {
    let mut out = CheckOutcome::new(check);
    let result = match check {
        Check::Manufactured => manufactured(exp, solved, &mut out),
        Check::Bochner => bochner(exp, &mut out),
        Check::Comparison => comparison(exp, &mut out),
        Check::Hamilton | Check::SoupletZhang => estimate(check, exp, solved, &mut out),
        Check::Lemma1 | Check::Lemma2 => lemma(check, exp, solved, &mut out),
        Check::Cutoff => cutoff(exp, &mut out),
        Check::Logsobolev => logsobolev(exp, seed, &mut out),
        Check::Liouville => liouville(exp, &mut out),
    };
    if let Err(e) = result {
        out.passed = false;
        out.summary = format!("error: {e}");
        out.error = Some(e.to_string());
    }
    out
}

fn solutions(solved: Option<&Solved>) -> Result<Vec<(Level, &Solution)>> {
    solved.ok_or_else(|| LabError::Parameter("no solutions were computed".into()))?.all()
}

fn manufactured(exp: &ExperimentConfig, solved: Option<&Solved>, out: &mut CheckOutcome) -> Result<()> {
    let InitialData::Constant { value } = initial(exp)? else {
        return Err(LabError::Parameter("manufactured requires constant initial data".into()));
    };
    let mut points = Vec::new();
    let mut exact = f64::NAN;
    for (level, sol) in solutions(solved)? {
        let last = sol.frames.last().expect("solutions have frames");
        exact = ode_exact(sol.params.a, value.ln(), sol.params.horizon)?;
        let err = last.values.iter().fold(0.0f64, |m, u| m.max((u - exact).abs() / exact));
        points.push((level, sol.grid().spacing, err));
    }
    let table = RefinementTable::new("endpoint_relative_error", Axis::Time, &points);
    let err = table.last_value();
    let order = table.min_order();
    out.passed = err <= MANUFACTURED_TOLERANCE && order.is_none_or(|p| p >= MANUFACTURED_ORDER);
    out.summary = format!("endpoint error {err:.3e}, temporal order {}", fmt_opt(order));
    out.metric("exact_endpoint", exact);
    out.metric("endpoint_relative_error", err);
    out.metric("min_temporal_order", order.unwrap_or(f64::NAN));
    out.tables.push(table);
    Ok(())
}

fn bochner(exp: &ExperimentConfig, out: &mut CheckOutcome) -> Result<()> {
    let data = initial(exp)?;
    let mut points = Vec::new();
    let mut margin_ok = true;
    let mut margins = Vec::new();
    for &level in &exp.levels {
        let g = grid(exp, level.cells)?;
        let u = Field::from_fn(g, 0.0, |r| data.eval(r))?;
        let eq = bochner_residual(&exp.space, &u, None)?;
        points.push((level, g.spacing, eq.equality_max()));
        for &m in &exp.m {
            let margin = bochner_residual(&exp.space, &u, Some(m))?.margin_min().unwrap_or(f64::NAN);
            let floor = -BOCHNER_MARGIN_FACTOR * g.spacing * g.spacing;
            margin_ok &= margin >= floor;
            margins.push(json!({"m": m, "cells": level.cells, "margin_min": margin, "floor": floor}));
            out.metric(format!("margin_min_m{m}"), margin);
        }
    }
    let table = RefinementTable::new("equality_residual_max", Axis::Space, &points);
    let orders: Vec<f64> = table.orders().collect();
    let in_range = orders.iter().all(|p| (BOCHNER_ORDER.0..=BOCHNER_ORDER.1).contains(p));
    out.passed = in_range && orders.len() + 1 == points.len() && margin_ok;
    out.summary = format!(
        "equality residual {:.3e}, orders [{}], m-margins {}",
        table.last_value(),
        orders.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join(", "),
        if margin_ok { "ok" } else { "violated" }
    );
    out.metric("equality_residual_max", table.last_value());
    out.metric("min_order", table.min_order().unwrap_or(f64::NAN));
    out.metric("max_order", orders.iter().copied().reduce(f64::max).unwrap_or(f64::NAN));
    out.detail = json!({ "margins": margins });
    out.tables.push(table);
    Ok(())
}

fn comparison(exp: &ExperimentConfig, out: &mut CheckOutcome) -> Result<()> {
    let mut worst = f64::INFINITY;
    let mut rows = Vec::new();
    for &radius in &exp.radii {
        let bounds = CurvatureBounds::certify(&exp.space, exp.k, radius, CURVATURE_SAMPLES)?;
        let margin = comparison_check(&exp.space, &bounds, radius, CURVATURE_SAMPLES)?;
        worst = worst.min(margin);
        out.metric(format!("margin_R{radius}"), margin);
        rows.push(json!({"R": radius, "alpha": bounds.alpha, "lambda_min": bounds.lambda_min, "margin": margin}));
    }
    out.passed = worst >= -COMPARISON_TOLERANCE;
    out.summary = format!("min margin {worst:.3e} over R = {:?}", exp.radii);
    out.metric("margin_min", worst);
    out.detail = json!({ "rows": rows });
    Ok(())
}

fn estimate(check: Check, exp: &ExperimentConfig, solved: Option<&Solved>, out: &mut CheckOutcome) -> Result<()> {
    let verify = |sol: &Solution, radius: f64| -> Result<EstimateReport> {
        let bounds = CurvatureBounds::certify(&exp.space, exp.k, radius, CURVATURE_SAMPLES)?;
        match check {
            Check::Hamilton => verify_hamilton(sol, &bounds),
            _ => verify_souplet_zhang(sol, &bounds),
        }
    };
    let levels = solutions(solved)?;
    let mut passed = true;
    let mut summary = Vec::new();
    let mut details = Vec::new();
    for &radius in &exp.radii {
        let mut points = Vec::new();
        let mut finest = None;
        for &(level, sol) in &levels {
            let report = verify(sol, radius)?;
            points.push((level, sol.grid().spacing, report.empirical_cn));
            finest = Some(report);
        }
        let table = RefinementTable::new(format!("empirical_cn_R{radius}"), Axis::Space, &points);
        let finite = table.rows.iter().all(|r| r.value.is_finite());
        let change = table.last_relative_change();
        passed &= finite && change.is_none_or(|c| c < CN_STABILITY);
        out.metric(format!("empirical_cn_R{radius}"), table.last_value());
        if let Some(c) = change {
            out.metric(format!("cn_relative_change_R{radius}"), c);
        }
        summary.push(format!("R={radius}: C_n {:.4} (Δ {})", table.last_value(), fmt_pct(change)));
        if let Some(report) = finest {
            out.file(format!("{}_R{radius}.csv", check.as_str()), report.to_csv());
            details.push(report.to_json());
        }
        out.tables.push(table);
    }
    if let Some(scale) = exp.scale {
        let (level, sol) = levels[0];
        let radius = exp.radii[0];
        let base = verify(sol, radius)?.ratio_max;
        let scaled = verify(&solve_level(exp, level, scale)?, radius)?.ratio_max;
        let change = (scaled - base).abs() / base.abs().max(NEGLIGIBLE);
        passed &= change < SCALE_TOLERANCE;
        out.metric("scale_relative_change", change);
        summary.push(format!("scale ×{scale}: Δ {change:.1e}"));
    }
    out.passed = passed;
    out.summary = summary.join("; ");
    out.detail = json!({ "finest": details });
    Ok(())
}

fn lemma_constants(exp: &ExperimentConfig, sol: &Solution) -> Result<EstimateConstants> {
    let p = &sol.params;
    constants(exp.space.n, exp.k, p.a, p.upper, p.lower)
}

/// Smallest interior residual over every frame with a centered time difference.
fn lemma_min(check: Check, sol: &Solution, consts: &EstimateConstants, mutation: Mutation) -> Result<f64> {
    (1..sol.frames.len().saturating_sub(1)).try_fold(f64::INFINITY, |acc, k| {
        let field = match check {
            Check::Lemma1 => lemma1_residual_with(sol, consts, k, mutation)?,
            _ => lemma2_residual_with(sol, consts, k, mutation)?,
        };
        Ok(acc.min(interior_min(&field)))
    })
}

fn lemma(check: Check, exp: &ExperimentConfig, solved: Option<&Solved>, out: &mut CheckOutcome) -> Result<()> {
    let levels = solutions(solved)?;
    let mut points = Vec::new();
    let mut passed = true;
    let mut rows = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    for &(level, sol) in &levels {
        if sol.frames.len() < 3 {
            return Err(LabError::Parameter("lemma residuals need at least three frames".into()));
        }
        let consts = lemma_constants(exp, sol)?;
        let min = lemma_min(check, sol, &consts, Mutation::Faithful)?;
        let tol = LEMMA_TOLERANCE_FACTOR * (sol.grid().spacing + sol.dt);
        passed &= min >= -tol;
        points.push((level, sol.grid().spacing, (-min).max(0.0)));
        rows.push(json!({"cells": level.cells, "dt": sol.dt, "min_residual": min, "tolerance": tol}));
        last = (min, tol);
    }
    let (min, tol) = last;
    out.metric("min_residual", min);
    out.metric("tolerance", tol);
    let mut summary = format!("min residual {min:.3e} (tol {tol:.2e})");
    if check == Check::Lemma2 {
        let base = levels.iter().try_fold(f64::INFINITY, |acc, (_, sol)| {
            Ok::<_, LabError>(acc.min(base_estimate_margin(sol, &lemma_constants(exp, sol)?)?))
        })?;
        passed &= base >= 0.0;
        out.metric("base_estimate_margin", base);
        summary.push_str(&format!(", base margin {base:.3e}"));
    }
    if let Some(mutation) = exp.mutation {
        let &(_, sol) = levels.last().expect("at least one level");
        let honest = min;
        let mutant = lemma_min(check, sol, &lemma_constants(exp, sol)?, mutation)?;
        let expected = match mutation {
            Mutation::FlipCoupling => mutant < -tol,
            // a weaker inequality can only raise the residual
            Mutation::FlipQuadratic | Mutation::Faithful => mutant >= honest,
        };
        passed &= expected;
        out.metric("mutant_min_residual", mutant);
        summary.push_str(&format!(", mutant {mutant:.3e} ({})", if expected { "as expected" } else { "unexpected" }));
    }
    out.passed = passed;
    out.summary = summary;
    out.detail = json!({ "levels": rows });
    out.tables.push(RefinementTable::new("residual_deficit", Axis::Space, &points));
    Ok(())
}

fn cutoff(exp: &ExperimentConfig, out: &mut CheckOutcome) -> Result<()> {
    let horizon = exp.horizon.ok_or_else(|| LabError::Parameter("T is not configured".into()))?;
    let t0 = exp.t0.unwrap_or(horizon);
    let taus = if exp.tau.is_empty() { vec![t0] } else { exp.tau.clone() };
    let mut rows = Vec::new();
    let mut worst_spread = 0.0f64;
    let mut finite = true;
    for &eps in &exp.epsilon {
        for &tau in &taus {
            let mut c_eps = Vec::new();
            for &radius in &exp.radii {
                let p = cutoff_build(radius, t0, horizon, tau, eps)?;
                finite &= p.c_time.is_finite() && p.c_space.is_finite();
                c_eps.push(p.c_space);
                rows.push(json!({"epsilon": eps, "tau": tau, "R": radius, "C": p.c_time, "C_eps": p.c_space}));
            }
            let lo = c_eps.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c_eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let spread = (hi - lo) / lo;
            worst_spread = worst_spread.max(spread);
            out.metric(format!("c_eps_spread_eps{eps}_tau{tau}"), spread);
        }
    }
    out.passed = finite && worst_spread < CUTOFF_SPREAD;
    out.summary = format!("{} profiles verified, max C_ε spread across R {:.2}%", rows.len(), 100.0 * worst_spread);
    out.metric("max_c_eps_spread", worst_spread);
    out.detail = json!({ "profiles": rows });
    Ok(())
}

fn logsobolev(exp: &ExperimentConfig, seed: u64, out: &mut CheckOutcome) -> Result<()> {
    let mut el = Vec::new();
    let mut sm = Vec::new();
    let mut min_denominator = f64::INFINITY;
    let mut finest = None;
    for &level in &exp.levels {
        let cfg = LogSobolevConfig {
            cells: level.cells,
            starts: exp.starts,
            iterations: exp.iterations,
            seed,
            ..Default::default()
        };
        let lsi = log_sobolev_constant(&exp.space, &cfg)?;
        let dr = lsi.extremizer.grid.spacing;
        el.push((level, dr, lsi.euler_lagrange_residual));
        sm.push((level, dr, lsi.s_m));
        min_denominator = min_denominator.min(lsi.min_denominator);
        finest = Some(lsi);
    }
    let lsi = finest.ok_or_else(|| LabError::Parameter("logsobolev needs at least one level".into()))?;
    let el_table = RefinementTable::new("euler_lagrange_residual", Axis::Space, &el);
    let order = el_table.min_order();
    let ms = if exp.m.is_empty() { vec![1.0] } else { exp.m.clone() };
    let mut bounds = Vec::new();
    let mut bounds_ok = true;
    for &m in &ms {
        let report = verify_chung_yau(&exp.space, &lsi, &lsi.spectral, m)?;
        bounds_ok &= report.all_passed();
        out.metric(format!("margin_A_m{m}"), report.sup_bound.margin);
        out.metric(format!("margin_B_m{m}"), report.gradient_bound.margin);
        out.metric(format!("margin_C_m{m}"), report.constant_bound.margin);
        out.metric(format!("margin_min_u_m{m}"), report.lower_bound.margin);
        bounds.push(report.to_json(&lsi.spectral, &lsi));
    }
    let sp = &lsi.spectral;
    out.passed = min_denominator >= 0.0 && order.is_none_or(|p| p >= EULER_LAGRANGE_ORDER) && bounds_ok;
    out.summary = format!(
        "λ₁ {:.6}, S_M {:.6}{}, EL order {}, Chung-Yau {}",
        sp.lambda1,
        lsi.s_m,
        if lsi.attained { "" } else { " (not attained)" },
        fmt_opt(order),
        if bounds_ok { "pass" } else { "fail" }
    );
    out.metric("lambda1", sp.lambda1);
    out.metric("diameter", sp.diameter);
    out.metric("volume", sp.volume);
    out.metric("s_m", lsi.s_m);
    out.metric("euler_lagrange_residual", lsi.euler_lagrange_residual);
    out.metric("min_el_order", order.unwrap_or(f64::NAN));
    out.metric("min_denominator", min_denominator);
    out.metric("normalization_defect", lsi.normalization_defect);
    out.metric("attained", if lsi.attained { 1.0 } else { 0.0 });
    out.detail = json!({ "result": lsi.to_json(), "chung_yau": bounds });
    out.file("extremizer.csv".into(), lsi.extremizer_csv());
    out.tables.push(el_table);
    out.tables.push(RefinementTable::new("s_m", Axis::Space, &sm));
    Ok(())
}

fn liouville(exp: &ExperimentConfig, out: &mut CheckOutcome) -> Result<()> {
    let mut rows = Vec::new();
    let mut matched = 0usize;
    let mut expected = 0usize;
    for case in &exp.cases {
        let verdict = liouville_classify(case.a, case.lower, case.upper, case.growth);
        let agrees = match (&verdict, case.expected) {
            (Ok(v), Some(e)) => Some(*v == e),
            (Err(_), Some(_)) => Some(false),
            (_, None) => None,
        };
        expected += usize::from(agrees.is_some());
        matched += usize::from(agrees == Some(true));
        rows.push(json!({
            "a": case.a,
            "lower": case.lower,
            "upper": case.upper,
            "growth": case.growth,
            "verdict": verdict.as_ref().ok(),
            "error": verdict.as_ref().err().map(ToString::to_string),
            "expected": case.expected,
            "matches": agrees,
        }));
    }
    let mut worst_gap = 0.0f64;
    let mut ode = Vec::new();
    for a in [1.0, 2.0] {
        for c in [1.0, -1.0, 5.0, -5.0] {
            let t = -40.0 / a;
            let gap = liouville_ode_gap(a, c, t)?;
            worst_gap = worst_gap.max(gap);
            ode.push(json!({"a": a, "c": c, "t": t, "gap": gap}));
        }
    }
    out.passed = matched == expected && worst_gap <= ODE_GAP_TOLERANCE;
    out.summary = format!("{matched}/{expected} verdicts as expected, ODE gap {worst_gap:.1e}");
    out.metric("verdicts_matched", matched as f64);
    out.metric("verdicts_expected", expected as f64);
    out.metric("ode_gap_max", worst_gap);
    out.detail = json!({ "truth_table": rows, "ode_cross_check": ode });
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.2}"))
}

fn fmt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{:.1}%", 100.0 * v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(cells: usize, dt: f64) -> Level {
        Level { cells, dt: Some(dt) }
    }

    #[test]
    fn orders_follow_the_axis() {
        let pts = [(level(16, 0.1), 0.1, 4e-2), (level(32, 0.05), 0.05, 1e-2), (level(64, 0.025), 0.025, 2.5e-3)];
        let t = RefinementTable::new("e", Axis::Space, &pts);
        assert!(t.rows[0].order.is_none());
        for r in &t.rows[1..] {
            assert!((r.order.unwrap() - 2.0).abs() < 1e-12);
            assert!((r.relative_change.unwrap() - 0.75).abs() < 1e-12);
        }
        // equal dt everywhere: no temporal order
        let pts = [(level(16, 0.1), 0.1, 1.0), (level(32, 0.1), 0.05, 0.5)];
        assert!(RefinementTable::new("e", Axis::Time, &pts).min_order().is_none());
    }

    #[test]
    fn negligible_values_are_stable() {
        let pts = [(level(16, 0.1), 0.1, 4e-16), (level(32, 0.05), 0.05, 2e-16)];
        assert!(RefinementTable::new("cn", Axis::Space, &pts).last_relative_change().unwrap() < 1e-3);
    }
}
