//! Uniform grids, second-order finite differences and trapezoidal quadrature
//! against the weighted measure `e^{−f} dv`.

use std::f64::consts::PI;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::ModelSpace;
use crate::linalg::Tridiagonal;

pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Nodes `0, Δr, …, R` on a ray from the pole.
    Radial,
    /// Nodes `0, Δr, …, L − Δr` on a circle of circumference `L`.
    Periodic,
}

/// Uniform grid; node `i` sits at `i·Δr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub kind: GridKind,
    pub cells: usize,
    pub spacing: f64,
}

impl Grid {
    pub fn radial(extent: f64, cells: usize) -> Result<Self> {
        Self::new(GridKind::Radial, extent, cells)
    }

    pub fn periodic(circumference: f64, cells: usize) -> Result<Self> {
        Self::new(GridKind::Periodic, circumference, cells)
    }

    /// Grid matching the space: periodic over the full circle, radial otherwise.
    pub fn for_space(space: &ModelSpace, radial_extent: f64, cells: usize) -> Result<Self> {
        match space.circumference {
            Some(l) if space.is_circle() => Self::periodic(l, cells),
            _ => Self::radial(radial_extent, cells),
        }
    }

    fn new(kind: GridKind, extent: f64, cells: usize) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(LabError::Parameter(format!("grid needs N ≥ {MIN_CELLS} cells, got {cells}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(LabError::Parameter(format!("grid extent must be positive, got {extent}")));
        }
        Ok(Self { kind, cells, spacing: extent / cells as f64 })
    }

    pub fn len(&self) -> usize {
        match self.kind {
            GridKind::Radial => self.cells + 1,
            GridKind::Periodic => self.cells,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `R` for radial grids, `L` for periodic ones.
    pub fn extent(&self) -> f64 {
        self.cells as f64 * self.spacing
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Distance of node `i` from the base point `r = 0`.
    pub fn distance(&self, i: usize) -> f64 {
        let r = self.node(i);
        match self.kind {
            GridKind::Radial => r,
            GridKind::Periodic => r.min(self.extent() - r),
        }
    }

    /// Same grid with half the spacing.
    pub fn refined(&self) -> Self {
        Self { cells: self.cells * 2, spacing: self.spacing / 2.0, ..*self }
    }

    fn ensure_matches(&self, space: &ModelSpace) -> Result<()> {
        match (self.kind, space.is_circle()) {
            (GridKind::Periodic, true) => {
                let l = space.circumference.unwrap_or(f64::NAN);
                if (self.extent() - l).abs() > 1e-12 * l {
                    return Err(LabError::Shape(format!(
                        "periodic grid length {} does not match circumference {l}",
                        self.extent()
                    )));
                }
                Ok(())
            }
            (GridKind::Radial, false) => Ok(()),
            (kind, _) => Err(LabError::Shape(format!("{kind:?} grid does not fit {}", space.describe()))),
        }
    }
}

/// Nodal values on a grid at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::Shape(format!("field has {} values, grid has {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Domain(format!("non-finite value at node {i} (r = {})", grid.node(i))));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect(), time)
    }

    pub fn constant(grid: Grid, value: f64, time: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()], time)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), time: self.time }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(LabError::Shape("fields live on different grids".into()));
        }
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            time: self.time,
        })
    }

    /// Requires strictly positive values, naming the first offending node.
    pub fn ensure_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v > 0.0)) {
            Some(i) => Err(LabError::Domain(format!(
                "field must be positive; u = {} at node {i} (r = {})",
                self.values[i],
                self.grid.node(i)
            ))),
            None => Ok(()),
        }
    }

    /// CSV `r,value` with shortest round-trip decimal formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.grid.node(i), v));
        }
        out
    }

    /// Parses the output of [`Field::to_csv`]; the grid is rebuilt from the `r` column.
    pub fn from_csv<R: BufRead>(reader: R, kind: GridKind, time: f64) -> Result<Self> {
        let mut rs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or_else(|| LabError::Parse(format!("line {}: missing column", lineno + 1)))?
                    .trim()
                    .parse()
                    .map_err(|e| LabError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            rs.push(next()?);
            vs.push(next()?);
        }
        if rs.len() < 2 {
            return Err(LabError::Parse("field CSV needs at least two rows".into()));
        }
        let spacing = rs[1] - rs[0];
        for (i, r) in rs.iter().enumerate() {
            if (r - i as f64 * spacing).abs() > 1e-12 * (1.0 + r.abs()) + 1e-9 * spacing {
                return Err(LabError::Parse(format!("non-uniform node at row {i}: r = {r}")));
            }
        }
        let cells = match kind {
            GridKind::Radial => rs.len() - 1,
            GridKind::Periodic => rs.len(),
        };
        let grid = Grid::new(kind, spacing * cells as f64, cells)?;
        Self::new(grid, vs, time)
    }

    /// JSON with decimal values for readability and hexadecimal floats for
    /// bit-exact reconstruction.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": {
                "kind": self.grid.kind,
                "cells": self.grid.cells,
                "spacing": self.grid.spacing,
                "spacing_hex": hex_float(self.grid.spacing),
            },
            "time": self.time,
            "time_hex": hex_float(self.time),
            "values": self.values,
            "values_hex": self.values.iter().map(|&v| hex_float(v)).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let err = |what: &str| LabError::Parse(format!("field JSON: missing or malformed '{what}'"));
        let grid = value.get("grid").ok_or_else(|| err("grid"))?;
        let kind: GridKind = serde_json::from_value(grid.get("kind").cloned().ok_or_else(|| err("grid.kind"))?)
            .map_err(|_| err("grid.kind"))?;
        let cells = grid.get("cells").and_then(|c| c.as_u64()).ok_or_else(|| err("grid.cells"))? as usize;
        let spacing =
            parse_hex_float(grid.get("spacing_hex").and_then(|s| s.as_str()).ok_or_else(|| err("grid.spacing_hex"))?)?;
        let time = parse_hex_float(value.get("time_hex").and_then(|s| s.as_str()).ok_or_else(|| err("time_hex"))?)?;
        let values = value
            .get("values_hex")
            .and_then(|v| v.as_array())
            .ok_or_else(|| err("values_hex"))?
            .iter()
            .map(|v| v.as_str().ok_or_else(|| err("values_hex[]")).and_then(parse_hex_float))
            .collect::<Result<Vec<_>>>()?;
        if cells < MIN_CELLS || !(spacing > 0.0) {
            return Err(err("grid"));
        }
        Self::new(Grid { kind, cells, spacing }, values, time)
    }
}

/// C-style hexadecimal float, e.g. `0x1.921fb54442d18p+1`.
pub fn hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & 0x000f_ffff_ffff_ffff;
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    let esign = if exp >= 0 { "+" } else { "-" };
    format!("{sign}0x{lead}{frac}p{esign}{}", exp.abs())
}

/// Inverse of [`hex_float`].
pub fn parse_hex_float(s: &str) -> Result<f64> {
    let bad = || LabError::Parse(format!("malformed hexadecimal float '{s}'"));
    match s {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (negative, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let rest = rest.strip_prefix("0x").ok_or_else(bad)?;
    let (mant, exp) = rest.split_once('p').ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (lead, frac) = match mant.split_once('.') {
        Some((l, f)) => (l, f),
        None => (mant, ""),
    };
    if frac.len() > 13 || !(lead == "0" || lead == "1") {
        return Err(bad());
    }
    let frac_bits =
        if frac.is_empty() { 0 } else { u64::from_str_radix(&format!("{frac:0<13}"), 16).map_err(|_| bad())? };
    let bits = if lead == "0" {
        if frac_bits == 0 {
            0
        } else if exp == -1022 {
            frac_bits
        } else {
            return Err(bad());
        }
    } else {
        if !(-1022..=1023).contains(&exp) {
            return Err(bad());
        }
        (((exp + 1023) as u64) << 52) | frac_bits
    };
    let v = f64::from_bits(bits);
    Ok(if negative { -v } else { v })
}

/// Treatment of the outer radial boundary `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterBoundary {
    /// Reflecting ghost node, `u'(R) = 0`.
    #[default]
    Neumann,
    /// Boundary value held fixed; the operator row is zero.
    Dirichlet,
    /// Second-order one-sided stencils, for evaluating the operator on
    /// arbitrary smooth fields.
    OneSided,
}

/// Centered second-order `∂_r u`; one-sided second order at radial ends,
/// wrap-around on periodic grids. `|∇u|` is the absolute value.
pub fn gradient_fd(field: &Field) -> Field {
    let g = field.grid;
    let u = &field.values;
    let n = u.len();
    let h = g.spacing;
    let values = (0..n)
        .map(|i| match g.kind {
            GridKind::Periodic => (u[(i + 1) % n] - u[(i + n - 1) % n]) / (2.0 * h),
            GridKind::Radial if i == 0 => (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h),
            GridKind::Radial if i == n - 1 => (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h),
            GridKind::Radial => (u[i + 1] - u[i - 1]) / (2.0 * h),
        })
        .collect();
    Field { grid: g, values, time: field.time }
}

/// Centered second-order `∂²_r u`; even reflection at the pole, one-sided at `R`.
pub fn second_derivative_fd(field: &Field) -> Field {
    let g = field.grid;
    let u = &field.values;
    let n = u.len();
    let h2 = g.spacing * g.spacing;
    let values = (0..n)
        .map(|i| match g.kind {
            GridKind::Periodic => (u[(i + 1) % n] - 2.0 * u[i] + u[(i + n - 1) % n]) / h2,
            GridKind::Radial if i == 0 => 2.0 * (u[1] - u[0]) / h2,
            GridKind::Radial if i == n - 1 => (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2,
            GridKind::Radial => (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2,
        })
        .collect();
    Field { grid: g, values, time: field.time }
}

/// Tridiagonal matrix of the discrete `Δ_f` on `grid`. Periodic grids fill the
/// corner entries (`lower[0]`, `upper[N−1]`). [`OuterBoundary::OneSided`] is
/// not tridiagonal and is rejected here.
pub fn f_laplacian_matrix(space: &ModelSpace, grid: &Grid, outer: OuterBoundary) -> Result<Tridiagonal> {
    grid.ensure_matches(space)?;
    let n = grid.len();
    let h = grid.spacing;
    let inv_h2 = 1.0 / (h * h);
    let mut m = Tridiagonal::zeros(n);
    match grid.kind {
        GridKind::Periodic => {
            for i in 0..n {
                let b = space.drift(grid.node(i))? / (2.0 * h);
                m.lower[i] = inv_h2 - b;
                m.diag[i] = -2.0 * inv_h2;
                m.upper[i] = inv_h2 + b;
            }
        }
        GridKind::Radial => {
            let dim = space.n as f64;
            m.diag[0] = -2.0 * dim * inv_h2;
            m.upper[0] = 2.0 * dim * inv_h2;
            for i in 1..n - 1 {
                let b = space.drift(grid.node(i))? / (2.0 * h);
                m.lower[i] = inv_h2 - b;
                m.diag[i] = -2.0 * inv_h2;
                m.upper[i] = inv_h2 + b;
            }
            match outer {
                OuterBoundary::Neumann => {
                    m.lower[n - 1] = 2.0 * inv_h2;
                    m.diag[n - 1] = -2.0 * inv_h2;
                }
                OuterBoundary::Dirichlet => {}
                OuterBoundary::OneSided => {
                    return Err(LabError::Parameter("one-sided boundary rows are not tridiagonal".into()))
                }
            }
        }
    }
    Ok(m)
}

/// Discrete `Δ_f u = u'' + ((n−1)φ'/φ − f')u'` with the default Neumann outer boundary.
pub fn f_laplacian_fd(space: &ModelSpace, field: &Field) -> Result<Field> {
    f_laplacian_fd_with(space, field, OuterBoundary::Neumann)
}

pub fn f_laplacian_fd_with(space: &ModelSpace, field: &Field, outer: OuterBoundary) -> Result<Field> {
    let grid = field.grid;
    let values = match (grid.kind, outer) {
        (GridKind::Radial, OuterBoundary::OneSided) => {
            let mut v = f_laplacian_matrix(space, &grid, OuterBoundary::Dirichlet)?.apply(&field.values);
            let last = grid.len() - 1;
            let d1 = gradient_fd(field).values[last];
            let d2 = second_derivative_fd(field).values[last];
            v[last] = d2 + space.drift(grid.node(last))? * d1;
            v
        }
        (GridKind::Radial, _) => f_laplacian_matrix(space, &grid, outer)?.apply(&field.values),
        (GridKind::Periodic, _) => f_laplacian_matrix(space, &grid, outer)?.apply_cyclic(&field.values),
    };
    Ok(Field { grid, values, time: field.time })
}

/// Area of the unit sphere `S^k`.
pub fn unit_sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k - 1) as f64 * unit_sphere_area(k - 2),
    }
}

/// Trapezoid weights of `e^{−f} dv` at each node.
pub fn quadrature_weights(space: &ModelSpace, grid: &Grid) -> Result<Vec<f64>> {
    grid.ensure_matches(space)?;
    let h = grid.spacing;
    Ok(match grid.kind {
        GridKind::Periodic => (0..grid.len()).map(|i| h * (-space.weight_at(grid.node(i)).value).exp()).collect(),
        GridKind::Radial => {
            let area = unit_sphere_area(space.n - 1);
            let last = grid.len() - 1;
            (0..grid.len())
                .map(|i| {
                    let r = grid.node(i);
                    let volume = if space.n == 1 { 1.0 } else { space.warp_at(r).value.powi(space.n as i32 - 1) };
                    let end = if i == 0 || i == last { 0.5 } else { 1.0 };
                    end * h * area * volume * (-space.weight_at(r).value).exp()
                })
                .collect()
        }
    })
}

/// `∫ u e^{−f} dv` by the trapezoid rule.
pub fn weighted_integral(space: &ModelSpace, field: &Field) -> Result<f64> {
    let w = quadrature_weights(space, &field.grid)?;
    Ok(w.iter().zip(&field.values).map(|(w, u)| w * u).sum())
}

/// `⟨u, v⟩_f = ∫ u v e^{−f} dv`.
pub fn weighted_inner(space: &ModelSpace, a: &Field, b: &Field) -> Result<f64> {
    if a.grid != b.grid {
        return Err(LabError::Shape("inner product of fields on different grids".into()));
    }
    let w = quadrature_weights(space, &a.grid)?;
    Ok(w.iter().zip(a.values.iter().zip(&b.values)).map(|(w, (x, y))| w * x * y).sum())
}

/// Weighted volume `V_f = ∫ e^{−f} dv` over the grid.
pub fn weighted_volume(space: &ModelSpace, grid: &Grid) -> Result<f64> {
    Ok(quadrature_weights(space, grid)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = Grid::radial(3.0, 60).unwrap();
        let c = Field::constant(g, 2.5, 0.0).unwrap();
        assert!(gradient_fd(&c).values.iter().all(|&v| v == 0.0));
        let lin = Field::from_fn(g, 0.0, |r| r).unwrap();
        for v in gradient_fd(&lin).values {
            assert!((v - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn gradient_converges_at_second_order() {
        let err = |cells| {
            let g = Grid::radial(3.0, cells).unwrap();
            let f = Field::from_fn(g, 0.0, f64::sin).unwrap();
            gradient_fd(&f).values.iter().enumerate().map(|(i, d)| (d - g.node(i).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() <= 0.5, "ratio {ratio}");
    }

    #[test]
    fn flat_laplacian_of_r_squared() {
        let s = ModelSpace::flat(3).unwrap();
        let g = Grid::radial(2.0, 64).unwrap();
        let f = Field::from_fn(g, 0.0, |r| r * r).unwrap();
        let l = f_laplacian_fd_with(&s, &f, OuterBoundary::OneSided).unwrap();
        for v in &l.values {
            assert_abs_diff_eq!(*v, 6.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn circle_eigenfunction() {
        let l = 3.0;
        let k = 2.0 * PI / l;
        let s = ModelSpace::circle(l).unwrap();
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&cells| {
                let g = Grid::periodic(l, cells).unwrap();
                let u = Field::from_fn(g, 0.0, |r| (k * r).sin()).unwrap();
                let lap = f_laplacian_fd(&s, &u).unwrap();
                lap.values.iter().zip(&u.values).map(|(a, b)| (a + k * k * b).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] < 0.02);
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.1);
    }

    #[test]
    fn gaussian_line_matches_symbolic_expansion() {
        let s = ModelSpace::gaussian(1).unwrap();
        let g = Grid::radial(4.0, 80).unwrap();
        let u = Field::from_fn(g, 0.0, |r| r * r).unwrap();
        let lap = f_laplacian_fd(&s, &u).unwrap();
        // symbolic: u'' − f'u' = 2 − (r/2)(2r)
        for i in 1..g.len() - 1 {
            let r = g.node(i);
            assert_abs_diff_eq!(lap.values[i], 2.0 - r * r, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(lap.values[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let s = ModelSpace::circle(2.0).unwrap();
        let g = Grid::radial(2.0, 32).unwrap();
        let u = Field::constant(g, 1.0, 0.0).unwrap();
        assert!(matches!(f_laplacian_fd(&s, &u), Err(LabError::Shape(_))));
        let wrong_len = Field::constant(Grid::periodic(3.0, 32).unwrap(), 1.0, 0.0).unwrap();
        assert!(matches!(f_laplacian_fd(&s, &wrong_len), Err(LabError::Shape(_))));
        assert!(Grid::radial(1.0, 8).is_err());
    }

    #[test]
    fn circle_quadrature() {
        let s = ModelSpace::circle(2.0 * PI).unwrap();
        let g = Grid::periodic(2.0 * PI, 128).unwrap();
        let one = Field::constant(g, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(weighted_integral(&s, &one).unwrap(), 2.0 * PI, epsilon = 1e-10);
        let sin2 = Field::from_fn(g, 0.0, |r| r.sin().powi(2)).unwrap();
        assert_abs_diff_eq!(weighted_integral(&s, &sin2).unwrap(), PI, epsilon = 1e-10);
    }

    #[test]
    fn normalized_gaussian_line_has_unit_mass() {
        // erf(3) = 1 − erfc(3); erfc(3) = 2.209049699858544e-05
        let erf3 = 1.0 - 2.209049699858544e-05;
        let s = ModelSpace::gaussian(1)
            .unwrap()
            .with_weight(Profile::Quadratic { coef: 0.25, offset: 0.5 * (4.0 * PI).ln() })
            .unwrap();
        let g = Grid::radial(6.0, 4000).unwrap();
        let mass = weighted_volume(&s, &g).unwrap();
        assert_abs_diff_eq!(mass, erf3, epsilon = 1e-6);
        assert!((mass - 1.0).abs() <= 2.209049699858544e-05 + 1e-6);
    }

    #[test]
    fn unit_sphere_areas() {
        assert_abs_diff_eq!(unit_sphere_area(2), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(unit_sphere_area(3), 2.0 * PI * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(unit_sphere_area(4), 8.0 * PI * PI / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn radial_volume_matches_ball() {
        let s = ModelSpace::flat(3).unwrap();
        let g = Grid::radial(2.0, 400).unwrap();
        let vol = weighted_volume(&s, &g).unwrap();
        assert_abs_diff_eq!(vol, 4.0 / 3.0 * PI * 8.0, epsilon = 1e-3);
    }

    fn bump(center: f64, width: f64) -> impl Fn(f64) -> f64 {
        move |r: f64| {
            let x = (r - center) / width;
            if x.abs() < 1.0 {
                (1.0 - x * x).powi(4)
            } else {
                0.0
            }
        }
    }

    fn self_adjoint_defect(space: &ModelSpace, cells: usize, cu: f64, cv: f64) -> f64 {
        let g = Grid::radial(8.0, cells).unwrap();
        let u = Field::from_fn(g, 0.0, bump(cu, 1.2)).unwrap();
        let v = Field::from_fn(g, 0.0, bump(cv, 1.5)).unwrap();
        let lu = f_laplacian_fd(space, &u).unwrap();
        let lv = f_laplacian_fd(space, &v).unwrap();
        let a = weighted_inner(space, &lu, &v).unwrap();
        let b = weighted_inner(space, &u, &lv).unwrap();
        let nu = weighted_inner(space, &u, &u).unwrap().sqrt();
        let nv = weighted_inner(space, &v, &v).unwrap().sqrt();
        (a - b).abs() / (nu * nv)
    }

    #[test]
    fn integration_by_parts() {
        let s = ModelSpace::hyperbolic(3).unwrap();
        let defect = |cells| {
            let g = Grid::radial(8.0, cells).unwrap();
            let u = Field::from_fn(g, 0.0, bump(3.0, 1.5)).unwrap();
            let lu = f_laplacian_fd(&s, &u).unwrap();
            let du = gradient_fd(&u);
            let lhs = -weighted_inner(&s, &lu, &u).unwrap();
            let rhs = weighted_inner(&s, &du, &du).unwrap();
            (lhs - rhs).abs() / rhs
        };
        let (a, b) = (defect(200), defect(400));
        assert!(a < 1e-2 && b < a / 3.0, "{a} {b}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn discrete_f_laplacian_is_self_adjoint(cu in 2.0f64..5.0, cv in 2.0f64..5.0, n in 2usize..5) {
            let spaces = [ModelSpace::gaussian(n).unwrap(), ModelSpace::hyperbolic(n).unwrap()];
            for s in &spaces {
                let coarse = self_adjoint_defect(s, 200, cu, cv);
                let fine = self_adjoint_defect(s, 400, cu, cv);
                prop_assert!(coarse < 2e-2, "coarse defect {}", coarse);
                prop_assert!(fine <= coarse / 3.0 + 1e-12, "coarse {} fine {}", coarse, fine);
            }
        }

        #[test]
        fn hex_float_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse_hex_float(&hex_float(x)).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn hex_float_known_values() {
        assert_eq!(hex_float(1.0), "0x1p+0");
        assert_eq!(hex_float(PI), "0x1.921fb54442d18p+1");
        assert_eq!(hex_float(-0.0), "-0x0p+0");
        assert_eq!(hex_float(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
        assert!(parse_hex_float("1.0").is_err());
    }

    #[test]
    fn field_serialization_round_trips() {
        let g = Grid::periodic(2.0 * PI, 32).unwrap();
        let f = Field::from_fn(g, 0.1 + 0.2, |r| (r * 1.1).exp() / 3.0).unwrap();
        let back = Field::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        let csv = Field::from_csv(f.to_csv().as_bytes(), GridKind::Periodic, f.time).unwrap();
        assert_eq!(csv.values, f.values);
        assert_abs_diff_eq!(csv.grid.spacing, g.spacing, epsilon = 1e-15);
    }
}
