//! The space-time cutoff `ψ̄(r,t) = η(r)·θ(t)` used in localizing the estimates.
//!
//! `η = s(2(R−r)/R)^{2/(1−ε)}` with the quintic smoothstep
//! `s(x) = 6x⁵ − 15x⁴ + 10x³`, whose first and second derivatives vanish at
//! both ends, so `η` is C². With `p = 2/(1−ε)` the exponent algebra gives
//! `|η'| R/η^ε = 2p·s·s'` and `|η''| R²/η^ε = 4p((p−1)s'² + s·s'')`, both
//! bounded and independent of `R`. `θ = ρ²` for the smoothstep ramp `ρ` over
//! `[t₀−T, τ]`, so `|θ'| = 2ρ|ρ'| ≤ C θ^{1/2}/(τ−t₀+T)`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// `(radial, temporal)` sample counts used by [`cutoff_build`].
pub const DEFAULT_CUTOFF_SAMPLES: (usize, usize) = (512, 256);

fn smoothstep(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let x2 = x * x;
    let x3 = x2 * x;
    (x3 * (10.0 + x * (-15.0 + 6.0 * x)), 30.0 * x2 * (1.0 - x) * (1.0 - x), 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x))
}

/// `ψ̄` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffJet {
    pub value: f64,
    pub dr: f64,
    pub drr: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub radius: f64,
    pub t0: f64,
    pub horizon: f64,
    pub tau: f64,
    pub epsilon: f64,
    /// Verified constant of `|∂_t ψ̄| ≤ C ψ̄^{1/2}/(τ−t₀+T)`.
    pub c_time: f64,
    /// Verified constant of `|∂_r ψ̄| ≤ C_ε ψ̄^ε/R` and `|∂²_r ψ̄| ≤ C_ε ψ̄^ε/R²`.
    pub c_space: f64,
}

impl CutoffProfile {
    fn exponent(&self) -> f64 {
        2.0 / (1.0 - self.epsilon)
    }

    /// `(η, η', η'')` at radius `r ≥ 0`.
    pub fn spatial(&self, r: f64) -> (f64, f64, f64) {
        let big_r = self.radius;
        let x = 2.0 * (big_r - r) / big_r;
        if x >= 1.0 {
            return (1.0, 0.0, 0.0);
        }
        if x <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let p = self.exponent();
        let (s, s1, s2) = smoothstep(x);
        let dx = -2.0 / big_r;
        let eta = s.powf(p);
        let d1 = p * s.powf(p - 1.0) * s1 * dx;
        let d2 = (p * (p - 1.0) * s.powf(p - 2.0) * s1 * s1 + p * s.powf(p - 1.0) * s2) * dx * dx;
        (eta, d1, d2)
    }

    /// `(θ, θ')` at time `t`.
    pub fn temporal(&self, t: f64) -> (f64, f64) {
        let span = self.tau - (self.t0 - self.horizon);
        let (rho, rho1, _) = smoothstep((t - (self.t0 - self.horizon)) / span);
        (rho * rho, 2.0 * rho * rho1 / span)
    }

    pub fn eval(&self, r: f64, t: f64) -> CutoffJet {
        let (eta, e1, e2) = self.spatial(r);
        let (theta, th1) = self.temporal(t);
        CutoffJet { value: eta * theta, dr: e1 * theta, drr: e2 * theta, dt: eta * th1 }
    }
}

/// Builds `ψ̄` and verifies it on the default sample grid.
pub fn cutoff_build(radius: f64, t0: f64, horizon: f64, tau: f64, epsilon: f64) -> Result<CutoffProfile> {
    if !(radius >= 2.0 && radius.is_finite()) {
        return Err(LabError::Parameter(format!("cutoff radius R must be ≥ 2, got {radius}")));
    }
    if !(horizon > 0.0 && horizon.is_finite() && t0.is_finite()) {
        return Err(LabError::Parameter(format!("cutoff needs finite t₀ and T > 0, got T = {horizon}")));
    }
    if !(tau > t0 - horizon && tau <= t0) {
        return Err(LabError::Parameter(format!("τ must lie in (t₀−T, t₀], got {tau}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(LabError::Parameter(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let mut profile = CutoffProfile { radius, t0, horizon, tau, epsilon, c_time: f64::NAN, c_space: f64::NAN };
    let (c, c_eps) = cutoff_verify(&profile, DEFAULT_CUTOFF_SAMPLES)?;
    profile.c_time = c;
    profile.c_space = c_eps;
    Ok(profile)
}

/// Checks the four cutoff properties on a `(radial, temporal)` sample grid
/// over `[0,R]×[t₀−T,t₀]` and returns the smallest constants `(C, C_ε)`
/// that make them hold there.
pub fn cutoff_verify(profile: &CutoffProfile, samples: (usize, usize)) -> Result<(f64, f64)> {
    let (nr, nt) = samples;
    if nr < 3 || nt < 3 {
        return Err(LabError::Parameter("cutoff verification needs at least 3×3 samples".into()));
    }
    let p = profile;
    let start = p.t0 - p.horizon;
    let span = p.tau - start;
    let fail = |what: String| Err(LabError::Construction(what));
    let mut c_time: f64 = 0.0;
    let mut c_space: f64 = 0.0;
    for j in 0..nt {
        let t = start + p.horizon * j as f64 / (nt - 1) as f64;
        for i in 0..nr {
            let r = p.radius * i as f64 / (nr - 1) as f64;
            let jet = p.eval(r, t);
            // (1) range and support
            if !(0.0..=1.0).contains(&jet.value) {
                return fail(format!("ψ̄({r}, {t}) = {} outside [0, 1]", jet.value));
            }
            if r >= p.radius && jet.value != 0.0 {
                return fail(format!("ψ̄ does not vanish at r = R (t = {t})"));
            }
            // (2) plateau
            if r <= p.radius / 2.0 {
                if jet.dr != 0.0 {
                    return fail(format!("∂_r ψ̄ ≠ 0 at r = {r} ≤ R/2"));
                }
                if t >= p.tau && jet.value != 1.0 {
                    return fail(format!("ψ̄({r}, {t}) = {} ≠ 1 on the plateau", jet.value));
                }
            }
            // (3) temporal bound and initial slice
            if j == 0 && jet.value != 0.0 {
                return fail(format!("ψ̄({r}, t₀−T) = {} ≠ 0", jet.value));
            }
            // (4) monotone in r, derivative bounds weighted by ψ̄^ε
            if jet.dr > 0.0 {
                return fail(format!("∂_r ψ̄ = {} > 0 at ({r}, {t})", jet.dr));
            }
            if jet.value > 0.0 {
                c_time = c_time.max(jet.dt.abs() * span / jet.value.sqrt());
                let weight = jet.value.powf(p.epsilon);
                c_space = c_space.max(-jet.dr * p.radius / weight).max(jet.drr.abs() * p.radius * p.radius / weight);
            } else if jet.dt != 0.0 || jet.dr != 0.0 || jet.drr != 0.0 {
                return fail(format!("ψ̄ vanishes at ({r}, {t}) but a derivative does not"));
            }
        }
    }
    Ok((c_time, c_space))
}
