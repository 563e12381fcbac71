//! Chung-Yau type bounds for the log-Sobolev extremizer under `Ric_f^m ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::discretize::gradient_fd;
use crate::error::{LabError, Result};
use crate::geometry::{ric_f_m_radial, ModelSpace};

use super::{LogSobolevResult, SpectralResult};

/// Samples per cell when checking the curvature hypothesis.
const HYPOTHESIS_OVERSAMPLING: usize = 4;

/// `value ≤ bound` (or `≥`, for lower bounds) with `margin ≥ 0` on success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

impl BoundCheck {
    fn at_most(value: f64, bound: f64) -> Self {
        let margin = bound - value;
        Self { passed: margin > 0.0, value, bound, margin }
    }

    fn at_least(value: f64, bound: f64) -> Self {
        let margin = value - bound;
        Self { passed: margin > 0.0, value, bound, margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChungYauReport {
    pub m: f64,
    /// `sup u ≤ e^{(n+m)/2}`.
    pub sup_bound: BoundCheck,
    /// `max (|∇ln u|² + S_M ln u²) ≤ (n+m) S_M`.
    pub gradient_bound: BoundCheck,
    /// `S_M ≥ min{λ₁/(8e), 1/((n+m)d²)}`.
    pub constant_bound: BoundCheck,
    /// `min u > e^{−2}`.
    pub lower_bound: BoundCheck,
    /// Smallest sampled `Ric_f^m` (hypothesis `≥ 0`).
    pub ric_m_min: f64,
}

impl ChungYauReport {
    pub fn all_passed(&self) -> bool {
        self.sup_bound.passed && self.gradient_bound.passed && self.constant_bound.passed && self.lower_bound.passed
    }

    /// `{lambda1, d, V_f, S_M, bounds: {A, B, C, margins}, corollary}`.
    pub fn to_json(&self, spectral: &SpectralResult, lsi: &LogSobolevResult) -> serde_json::Value {
        serde_json::json!({
            "lambda1": spectral.lambda1,
            "d": spectral.diameter,
            "V_f": spectral.volume,
            "S_M": lsi.s_m,
            "m": self.m,
            "bounds": {
                "A": self.sup_bound.passed,
                "B": self.gradient_bound.passed,
                "C": self.constant_bound.passed,
                "margins": {
                    "A": self.sup_bound.margin,
                    "B": self.gradient_bound.margin,
                    "C": self.constant_bound.margin,
                },
            },
            "corollary": self.lower_bound,
            "ric_m_min": self.ric_m_min,
        })
    }
}

pub fn verify_chung_yau(
    space: &ModelSpace,
    result: &LogSobolevResult,
    spectral: &SpectralResult,
    m: f64,
) -> Result<ChungYauReport> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(LabError::Domain(format!("m must be positive, got {m}")));
    }
    let length = super::circle_length(space)?;
    let u = &result.extremizer;
    let samples = HYPOTHESIS_OVERSAMPLING * u.len();
    let mut ric_m_min = f64::INFINITY;
    for j in 0..samples {
        let r = length * j as f64 / samples as f64;
        let value = ric_f_m_radial(space, r, m)?;
        if value < -1e-12 {
            return Err(LabError::Precondition(format!("Ric_f^m = {value} < 0 at r = {r} (m = {m})")));
        }
        ric_m_min = ric_m_min.min(value);
    }
    u.ensure_positive()?;
    let n = space.n as f64;
    let s = result.s_m;
    let log_u = u.map(f64::ln);
    let grad = gradient_fd(&log_u);
    let worst =
        grad.values.iter().zip(&log_u.values).map(|(d, l)| d * d + 2.0 * s * l).fold(f64::NEG_INFINITY, f64::max);
    let threshold = (spectral.lambda1 / (8.0 * std::f64::consts::E)).min(1.0 / ((n + m) * spectral.diameter.powi(2)));
    Ok(ChungYauReport {
        m,
        sup_bound: BoundCheck::at_most(u.max(), ((n + m) / 2.0).exp()),
        gradient_bound: BoundCheck::at_most(worst, (n + m) * s),
        constant_bound: BoundCheck::at_least(s, threshold),
        lower_bound: BoundCheck::at_least(u.min(), (-2.0f64).exp()),
        ric_m_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use crate::logsobolev::{log_sobolev_constant, LogSobolevConfig};
    use std::f64::consts::{E, PI};

    #[test]
    fn flat_circle_passes_all_bounds() {
        let space = ModelSpace::circle(2.0 * PI).unwrap();
        let cfg = LogSobolevConfig { starts: 2, iterations: 50, ..Default::default() };
        let lsi = log_sobolev_constant(&space, &cfg).unwrap();
        let rep = verify_chung_yau(&space, &lsi, &lsi.spectral, 1.0).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
        assert!((rep.sup_bound.bound - E).abs() < 1e-15);
        // min{1/(8e), 1/(2π²)} with λ₁ ≈ 1, d = π
        assert!((rep.constant_bound.bound - lsi.spectral.lambda1 / (8.0 * E)).abs() < 1e-15);
        assert_eq!(rep.ric_m_min, 0.0);
        let json = rep.to_json(&lsi.spectral, &lsi);
        assert!(json["bounds"]["margins"]["C"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn nonconstant_weight_violates_the_hypothesis() {
        let space = ModelSpace::circle(2.0 * PI)
            .unwrap()
            .with_weight(Profile::Cosine { amplitude: 0.3, wavenumber: 1.0 })
            .unwrap();
        let cfg = LogSobolevConfig { cells: 64, starts: 1, iterations: 10, ..Default::default() };
        let lsi = log_sobolev_constant(&space, &cfg).unwrap();
        assert!(matches!(verify_chung_yau(&space, &lsi, &lsi.spectral, 1.0), Err(LabError::Precondition(_))));
        assert!(matches!(verify_chung_yau(&space, &lsi, &lsi.spectral, 0.0), Err(LabError::Domain(_))));
    }
}
