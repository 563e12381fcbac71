//! Model smooth metric measure spaces.
//!
//! A non-circle space is `[0, ∞) × S^{n−1}` with metric `dr² + φ(r)² g_{S^{n−1}}`
//! and measure `e^{−f(r)} dv`. A circle is `ℝ/Lℤ` with an `L`-periodic weight.
//! Every profile carries analytic first and second derivatives; curvature is a
//! second-order quantity and differentiating sampled data twice loses accuracy.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Relative slack when comparing sampled `Ric_f` against a declared floor.
pub const CERTIFY_SLACK: f64 = 1e-9;

/// Value of a scalar profile with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet { value: 0.0, d1: 0.0, d2: 0.0 };
}

/// Sampled profile `(r, p, p', p'')` evaluated by Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedProfile {
    pub r: Vec<f64>,
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(r: Vec<f64>, value: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        let len = r.len();
        if len < 2 || value.len() != len || d1.len() != len || d2.len() != len {
            return Err(LabError::Shape(format!(
                "tabulated profile needs ≥ 2 rows of equal length, got r={} p={} p'={} p''={}",
                len,
                value.len(),
                d1.len(),
                d2.len()
            )));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Parameter("tabulated radii must be strictly increasing".into()));
        }
        if r.iter().chain(&value).chain(&d1).chain(&d2).any(|x| !x.is_finite()) {
            return Err(LabError::Parameter("tabulated profile contains non-finite entries".into()));
        }
        Ok(Self { r, value, d1, d2 })
    }

    fn eval(&self, r: f64) -> Jet {
        let last = self.r.len() - 1;
        let i = match self.r.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => i.min(last - 1),
            Err(0) => 0,
            Err(i) => (i - 1).min(last - 1),
        };
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        // cubic Hermite for p from (p, p'), for p' from (p', p''); p'' linear
        let hermite = |y0: f64, y1: f64, m0: f64, m1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * h * m0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * h * m1
        };
        Jet {
            value: hermite(self.value[i], self.value[i + 1], self.d1[i], self.d1[i + 1]),
            d1: hermite(self.d1[i], self.d1[i + 1], self.d2[i], self.d2[i + 1]),
            d2: self.d2[i] + s * (self.d2[i + 1] - self.d2[i]),
        }
    }
}

/// Closed-form or tabulated scalar profile used for warps `φ` and weights `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `c`
    Constant(f64),
    /// `r`
    Identity,
    /// `sinh r`
    Sinh,
    /// `coef·r² + offset`
    Quadratic {
        coef: f64,
        offset: f64,
    },
    /// `amplitude·cos(wavenumber·r)`
    Cosine {
        amplitude: f64,
        wavenumber: f64,
    },
    Tabulated(TabulatedProfile),
}

impl Profile {
    pub fn eval(&self, r: f64) -> Jet {
        match self {
            Profile::Constant(c) => Jet { value: *c, d1: 0.0, d2: 0.0 },
            Profile::Identity => Jet { value: r, d1: 1.0, d2: 0.0 },
            Profile::Sinh => Jet { value: r.sinh(), d1: r.cosh(), d2: r.sinh() },
            Profile::Quadratic { coef, offset } => {
                Jet { value: coef * r * r + offset, d1: 2.0 * coef * r, d2: 2.0 * coef }
            }
            Profile::Cosine { amplitude, wavenumber } => {
                let (s, c) = (wavenumber * r).sin_cos();
                Jet {
                    value: amplitude * c,
                    d1: -amplitude * wavenumber * s,
                    d2: -amplitude * wavenumber * wavenumber * c,
                }
            }
            Profile::Tabulated(t) => t.eval(r),
        }
    }

    /// `lim_{r→0} φ''(r)/φ(r)` for a warp with `φ(0) = 0`, `φ'(0) = 1`.
    fn curvature_ratio_at_origin(&self) -> f64 {
        match self {
            Profile::Identity => 0.0,
            Profile::Sinh => 1.0,
            Profile::Tabulated(t) => {
                let i = t.r.iter().position(|&r| r > 0.0).unwrap_or(t.r.len() - 1);
                t.d2[i] / t.value[i]
            }
            other => {
                let j = other.eval(1e-6);
                j.d2 / j.value
            }
        }
    }

    fn label(&self) -> String {
        match self {
            Profile::Constant(c) => format!("{c}"),
            Profile::Identity => "r".into(),
            Profile::Sinh => "sinh r".into(),
            Profile::Quadratic { coef, offset } if *offset == 0.0 => format!("{coef}·r²"),
            Profile::Quadratic { coef, offset } => format!("{coef}·r² + {offset}"),
            Profile::Cosine { amplitude, wavenumber } => format!("{amplitude}·cos({wavenumber}·r)"),
            Profile::Tabulated(t) => format!("table[{} rows]", t.r.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Flat,
    Gaussian,
    Hyperbolic,
    Warped,
    Circle,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpaceKind::Flat => "flat",
            SpaceKind::Gaussian => "gaussian",
            SpaceKind::Hyperbolic => "hyperbolic",
            SpaceKind::Warped => "warped",
            SpaceKind::Circle => "circle",
        };
        f.write_str(s)
    }
}

/// A rotationally symmetric weighted manifold or a weighted circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    pub kind: SpaceKind,
    pub n: usize,
    pub warp: Profile,
    pub weight: Profile,
    /// Circumference, circles only.
    pub circumference: Option<f64>,
    /// Synthetic dimension for `Ric_f^m`.
    pub m: Option<f64>,
}

impl ModelSpace {
    /// Euclidean `ℝⁿ` with `f ≡ 0`.
    pub fn flat(n: usize) -> Result<Self> {
        Self::build(SpaceKind::Flat, n, Profile::Identity, Profile::Constant(0.0), None)
    }

    /// The Gaussian shrinking soliton `ℝⁿ`, `f = r²/4`, `Ric_f = ½g`.
    pub fn gaussian(n: usize) -> Result<Self> {
        Self::build(SpaceKind::Gaussian, n, Profile::Identity, Profile::Quadratic { coef: 0.25, offset: 0.0 }, None)
    }

    /// Hyperbolic space of sectional curvature −1, `f ≡ 0`.
    pub fn hyperbolic(n: usize) -> Result<Self> {
        Self::build(SpaceKind::Hyperbolic, n, Profile::Sinh, Profile::Constant(0.0), None)
    }

    /// Circle of circumference `L` with `f ≡ 0`.
    pub fn circle(circumference: f64) -> Result<Self> {
        Self::build(SpaceKind::Circle, 1, Profile::Identity, Profile::Constant(0.0), Some(circumference))
    }

    /// General warped product with explicit warp and weight profiles.
    pub fn warped(n: usize, warp: Profile, weight: Profile) -> Result<Self> {
        Self::build(SpaceKind::Warped, n, warp, weight, None)
    }

    /// Replaces the weight profile, re-validating the space.
    pub fn with_weight(self, weight: Profile) -> Result<Self> {
        Self::build(self.kind, self.n, self.warp, weight, self.circumference).map(|s| Self { m: self.m, ..s })
    }

    pub fn with_m(mut self, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(LabError::Domain(format!("m must be positive, got {m}")));
        }
        self.m = Some(m);
        Ok(self)
    }

    fn build(kind: SpaceKind, n: usize, warp: Profile, weight: Profile, circumference: Option<f64>) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Parameter("dimension n must be ≥ 1".into()));
        }
        let space = Self { kind, n, warp, weight, circumference, m: None };
        if kind == SpaceKind::Circle {
            let l = circumference.unwrap_or(f64::NAN);
            if !(l > 0.0 && l.is_finite()) {
                return Err(LabError::Parameter(format!("circle circumference must be positive, got {l}")));
            }
            if n != 1 {
                return Err(LabError::Parameter("a circle has dimension 1".into()));
            }
            let (a, b) = (space.weight.eval(0.0), space.weight.eval(l));
            let tol = 1e-9 * (1.0 + a.value.abs() + a.d1.abs() + a.d2.abs());
            if (a.value - b.value).abs() > tol || (a.d1 - b.d1).abs() > tol || (a.d2 - b.d2).abs() > tol {
                return Err(LabError::Parameter(format!("weight {} is not {l}-periodic", space.weight.label())));
            }
        } else {
            let p = space.warp.eval(0.0);
            if p.value.abs() > 1e-9 || (p.d1 - 1.0).abs() > 1e-9 {
                return Err(LabError::Parameter(format!(
                    "warp must satisfy φ(0)=0, φ'(0)=1; got φ(0)={}, φ'(0)={}",
                    p.value, p.d1
                )));
            }
            if space.weight.eval(0.0).d1.abs() > 1e-9 {
                return Err(LabError::Parameter("radial weight must have f'(0) = 0".into()));
            }
        }
        Ok(space)
    }

    pub fn is_circle(&self) -> bool {
        self.kind == SpaceKind::Circle
    }

    pub fn warp_at(&self, r: f64) -> Jet {
        self.warp.eval(r)
    }

    pub fn weight_at(&self, r: f64) -> Jet {
        self.weight.eval(r)
    }

    /// `(n−1)φ'/φ − f'`, the first-order coefficient of `Δ_f` on radial functions.
    pub fn drift(&self, r: f64) -> Result<f64> {
        let fp = self.weight.eval(r).d1;
        if self.is_circle() || self.n == 1 {
            return Ok(-fp);
        }
        let phi = self.positive_warp(r)?;
        Ok((self.n - 1) as f64 * phi.d1 / phi.value - fp)
    }

    fn positive_warp(&self, r: f64) -> Result<Jet> {
        let phi = self.warp.eval(r);
        if !(phi.value > 0.0) {
            return Err(LabError::Domain(format!("warp φ({r}) = {} is not positive", phi.value)));
        }
        Ok(phi)
    }

    /// `Ric_f` at the pole, where the two eigenvalues coincide.
    pub fn ric_f_origin(&self) -> f64 {
        let fpp = self.weight.eval(0.0).d2;
        if self.is_circle() || self.n == 1 {
            return fpp;
        }
        -((self.n - 1) as f64) * self.warp.curvature_ratio_at_origin() + fpp
    }

    /// Descriptive label, e.g. `gaussian(n=3, f=0.25·r²)`.
    pub fn describe(&self) -> String {
        match self.kind {
            SpaceKind::Circle => {
                format!("circle(L={}, f={})", self.circumference.unwrap_or(f64::NAN), self.weight.label())
            }
            _ => format!("{}(n={}, φ={}, f={})", self.kind, self.n, self.warp.label(), self.weight.label()),
        }
    }

    /// Builds a catalog space from its name and string parameters.
    ///
    /// Recognised keys: `n`, `L` (circle), `weight` (`zero`, `quadratic`,
    /// `cosine`), `weight_coef`, `weight_offset`, `weight_amplitude`,
    /// `weight_wavenumber`, `m`, and `table` (path of a warped CSV table).
    pub fn from_catalog(name: &str, params: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| -> Result<Option<f64>> {
            params
                .get(k)
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| LabError::Parse(format!("key '{k}': '{v}' is not a number")))
                })
                .transpose()
        };
        let n = match get("n")? {
            Some(x) if x >= 1.0 && x.fract() == 0.0 => x as usize,
            Some(x) => return Err(LabError::Parameter(format!("key 'n': {x} is not a positive integer"))),
            None => 0,
        };
        let need_n = || -> Result<usize> {
            if n == 0 {
                Err(LabError::Parameter(format!("key 'n' is required for space '{name}'")))
            } else {
                Ok(n)
            }
        };
        let mut space = match name {
            "flat" => Self::flat(need_n()?)?,
            "gaussian" => Self::gaussian(need_n()?)?,
            "hyperbolic" => Self::hyperbolic(need_n()?)?,
            "circle" => {
                let l =
                    get("L")?.ok_or_else(|| LabError::Parameter("key 'L' is required for space 'circle'".into()))?;
                Self::circle(l)?
            }
            "warped" => {
                let path = params
                    .get("table")
                    .ok_or_else(|| LabError::Parameter("key 'table' is required for space 'warped'".into()))?;
                let file = std::fs::File::open(path)?;
                Self::from_table_csv(need_n()?, std::io::BufReader::new(file))?
            }
            other => return Err(LabError::Parameter(format!("unknown space '{other}'"))),
        };
        if let Some(w) = params.get("weight") {
            let weight = match w.trim() {
                "zero" => Profile::Constant(0.0),
                "quadratic" => Profile::Quadratic {
                    coef: get("weight_coef")?.unwrap_or(0.25),
                    offset: get("weight_offset")?.unwrap_or(0.0),
                },
                "cosine" => Profile::Cosine {
                    amplitude: get("weight_amplitude")?.unwrap_or(1.0),
                    wavenumber: get("weight_wavenumber")?.unwrap_or(1.0),
                },
                other => return Err(LabError::Parameter(format!("key 'weight': unknown profile '{other}'"))),
            };
            space = space.with_weight(weight)?;
        }
        if let Some(m) = get("m")? {
            space = space.with_m(m)?;
        }
        Ok(space)
    }

    /// Reads a warped space from CSV rows `r, φ, φ', φ'', f, f', f''` after
    /// a one-line header.
    pub fn from_table_csv<R: BufRead>(n: usize, reader: R) -> Result<Self> {
        let mut cols: [Vec<f64>; 7] = Default::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| LabError::Parse(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 7 {
                return Err(LabError::Parse(format!(
                    "line {}: expected 7 columns (r, φ, φ', φ'', f, f', f''), got {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        let [r, p, p1, p2, f, f1, f2] = cols;
        let warp = TabulatedProfile::new(r.clone(), p, p1, p2)?;
        let weight = TabulatedProfile::new(r, f, f1, f2)?;
        Self::warped(n, Profile::Tabulated(warp), Profile::Tabulated(weight))
    }
}

/// Curvature data a gradient estimate is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    /// Declared lower-bound parameter, `Ric_f ≥ −(n−1)K`.
    pub k: f64,
    /// Smallest sampled eigenvalue of `Ric_f` on the working interval.
    pub lambda_min: f64,
    /// `Δ_f r` on the unit distance sphere.
    pub alpha: f64,
    /// Radius of the working interval `[0, R]`.
    pub radius: f64,
}

impl CurvatureBounds {
    /// Checks the declared `K` against sampled `Ric_f` on `[0, R]` and records `α`.
    pub fn certify(space: &ModelSpace, k: f64, radius: f64, samples: usize) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(LabError::Parameter(format!("K must be ≥ 0, got {k}")));
        }
        if !(radius > 0.0) || samples == 0 {
            return Err(LabError::Parameter("certify needs R > 0 and at least one sample".into()));
        }
        let floor = -((space.n - 1) as f64) * k;
        let mut lambda_min = space.ric_f_origin();
        let mut worst_r = 0.0;
        let upper = if space.is_circle() { space.circumference.unwrap_or(radius) } else { radius };
        for j in 1..=samples {
            let r = upper * j as f64 / samples as f64;
            let (radial, spherical) = ric_f_eigenvalues(space, r)?;
            let low = radial.min(spherical);
            if low < lambda_min {
                lambda_min = low;
                worst_r = r;
            }
        }
        // sampled eigenvalues near the pole lose ~1e-11 to cancellation in 1 − φ'²
        if lambda_min < floor - CERTIFY_SLACK * (1.0 + floor.abs()) {
            return Err(LabError::Precondition(format!(
                "Ric_f ≥ −(n−1)K fails for K={k}: eigenvalue {lambda_min} < {floor} at r = {worst_r}"
            )));
        }
        let alpha = delta_f_distance(space, 1.0)?;
        Ok(Self { k, lambda_min, alpha, radius })
    }
}

/// Radial and spherical eigenvalues of `Ric_f = Ric + ∇²f`.
pub fn ric_f_eigenvalues(space: &ModelSpace, r: f64) -> Result<(f64, f64)> {
    let f = space.weight.eval(r);
    if space.is_circle() || space.n == 1 {
        return Ok((f.d2, f.d2));
    }
    if !(r > 0.0) {
        return Err(LabError::Domain(format!("Ric_f needs r > 0, got {r}")));
    }
    let phi = space.positive_warp(r)?;
    let nm1 = (space.n - 1) as f64;
    let radial = -nm1 * phi.d2 / phi.value + f.d2;
    let spherical = -phi.d2 / phi.value
        + (space.n as f64 - 2.0) * (1.0 - phi.d1 * phi.d1) / (phi.value * phi.value)
        + f.d1 * phi.d1 / phi.value;
    Ok((radial, spherical))
}

/// Radial eigenvalue of `Ric_f^m = Ric_f − (1/m) df⊗df`.
pub fn ric_f_m_radial(space: &ModelSpace, r: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(LabError::Domain(format!("m must be positive, got {m}")));
    }
    let (radial, _) = ric_f_eigenvalues(space, r)?;
    let fp = space.weight.eval(r).d1;
    Ok(radial - fp * fp / m)
}

/// `Δ_f u` for a radial (or circle) function with the given derivatives at `r`.
pub fn f_laplacian_radial(space: &ModelSpace, u1: f64, u2: f64, r: f64) -> Result<f64> {
    if !space.is_circle() && !(r > 0.0) {
        return Err(LabError::Domain(format!("radial Δ_f is singular at r = {r}; use f_laplacian_origin")));
    }
    Ok(u2 + space.drift(r)? * u1)
}

/// `r → 0` limit of `Δ_f u` for an even radial function: `n·u''(0)`.
pub fn f_laplacian_origin(space: &ModelSpace, u2: f64) -> f64 {
    space.n as f64 * u2
}

/// `Δ_f r` for the distance from the pole (circle: from `0`, worst of both sides).
pub fn delta_f_distance(space: &ModelSpace, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(LabError::Domain(format!("Δ_f r needs r > 0, got {r}")));
    }
    if space.is_circle() {
        let l = space.circumference.unwrap_or(f64::NAN);
        let forward = -space.weight.eval(r).d1;
        let backward = space.weight.eval(l - r).d1;
        return Ok(forward.max(backward));
    }
    space.drift(r)
}

/// Minimum over `r ∈ [1, R]` of `α + (n−1)K(R−1) − Δ_f r`.
pub fn comparison_check(space: &ModelSpace, bounds: &CurvatureBounds, radius: f64, samples: usize) -> Result<f64> {
    if !(radius >= 2.0) {
        return Err(LabError::Parameter(format!("comparison needs R ≥ 2, got {radius}")));
    }
    if samples < 2 {
        return Err(LabError::Parameter("comparison needs at least two samples".into()));
    }
    // re-verify the hypothesis on [0, R] rather than trusting the caller
    CurvatureBounds::certify(space, bounds.k, radius, samples)?;
    let ceiling = bounds.alpha + (space.n - 1) as f64 * bounds.k * (radius - 1.0);
    (0..samples).try_fold(f64::INFINITY, |acc, j| {
        let r = 1.0 + (radius - 1.0) * j as f64 / (samples - 1) as f64;
        Ok(acc.min(ceiling - delta_f_distance(space, r)?))
    })
}

/// `|∇²u|²` for a radial function: `u''² + (n−1)(φ' u'/φ)²`.
pub fn hessian_norm_sq_radial(space: &ModelSpace, u1: f64, u2: f64, r: f64) -> Result<f64> {
    if space.is_circle() || space.n == 1 {
        return Ok(u2 * u2);
    }
    if !(r > 0.0) {
        return Err(LabError::Domain(format!("radial Hessian needs r > 0, got {r}")));
    }
    let phi = space.positive_warp(r)?;
    let spherical = phi.d1 * u1 / phi.value;
    Ok(u2 * u2 + (space.n - 1) as f64 * spherical * spherical)
}

/// One row of the space catalog.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub metric: &'static str,
    pub weight: &'static str,
    pub curvature: String,
    pub note: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "flat",
            metric: "dr² + r² g_S, φ = r",
            weight: "f = 0 (or quadratic/cosine via 'weight')",
            curvature: "Ric_f = 0, K = 0".into(),
            note: "Δ_f r = (n−1)/r, α = n−1",
        },
        CatalogEntry {
            name: "gaussian",
            metric: "dr² + r² g_S, φ = r",
            weight: "f = r²/4",
            curvature: "Ric_f = 1/2 (lower bound 1/2), K = 0".into(),
            note: "shrinking soliton; Δ_f r = (n−1)/r − r/2",
        },
        CatalogEntry {
            name: "hyperbolic",
            metric: "dr² + sinh²r g_S, φ = sinh r",
            weight: "f = 0",
            curvature: "Ric_f = −(n−1), K = 1".into(),
            note: "Δ_f r = (n−1)coth r",
        },
        CatalogEntry {
            name: "circle",
            metric: "ℝ/Lℤ",
            weight: "L-periodic f (zero or cosine)",
            curvature: "Ric_f = f''".into(),
            note: "λ₁ = (2π/L)² when f = 0; d = L/2",
        },
        CatalogEntry {
            name: "warped",
            metric: "dr² + φ(r)² g_S from CSV table",
            weight: "tabulated f",
            curvature: "computed from table".into(),
            note: "columns r, φ, φ', φ'', f, f', f''",
        },
    ]
}
