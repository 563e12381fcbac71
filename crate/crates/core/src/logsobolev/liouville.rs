//! Classification of bounded positive ancient solutions under `Ric_f ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::solver::ode_exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No ancient solution with these bounds exists.
    NoSuchSolution,
    /// Every such solution is `u ≡ 1`.
    IdenticallyOne,
    /// Every such solution is constant.
    Constant,
    /// The theorem says nothing about this case.
    OutOfTheoremScope,
}

/// Verdict for an ancient solution with `lower ≤ u ≤ upper` on a space with
/// `Ric_f ≥ 0` (asserted by the caller). `growth_sublinear_sqrt` is the
/// caller's assertion of the sublinear growth hypothesis needed when `a = 0`.
pub fn liouville_classify(a: f64, lower: f64, upper: f64, growth_sublinear_sqrt: bool) -> Result<Verdict> {
    if !a.is_finite() {
        return Err(LabError::Parameter(format!("a must be finite, got {a}")));
    }
    if !(lower > 0.0) {
        return Err(LabError::Parameter(format!("lower bound must be positive, got {lower}")));
    }
    if !(upper >= lower) {
        return Err(LabError::Parameter(format!("lower bound {lower} exceeds upper bound {upper}")));
    }
    let threshold = (-2.0f64).exp();
    Ok(if a > 0.0 && upper <= threshold {
        Verdict::NoSuchSolution
    } else if a < 0.0 && lower >= threshold {
        if upper < 1.0 {
            Verdict::NoSuchSolution
        } else {
            Verdict::IdenticallyOne
        }
    } else if a == 0.0 && growth_sublinear_sqrt {
        Verdict::Constant
    } else {
        Verdict::OutOfTheoremScope
    })
}

/// `|exp(c·e^{at}) − 1|`: how far the spatially constant solution through
/// `ln u = c` at `t = 0` is from 1 at time `t`. For `a > 0` it vanishes as
/// `t → −∞`, so no ancient solution stays below `e^{−2}`.
pub fn liouville_ode_gap(a: f64, c: f64, t: f64) -> Result<f64> {
    Ok((ode_exact(a, c, t)? - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table() {
        let low = (-2.0f64).exp();
        let rows = [
            ((1.0, 0.01, low, false), Verdict::NoSuchSolution),
            ((-1.0, low, 0.5, false), Verdict::NoSuchSolution),
            ((-1.0, low, 2.0, false), Verdict::IdenticallyOne),
            ((0.0, 0.1, 5.0, true), Verdict::Constant),
            ((1.0, 0.1, 0.5, true), Verdict::OutOfTheoremScope),
            ((0.0, 0.1, 5.0, false), Verdict::OutOfTheoremScope),
            ((-1.0, 0.1, 2.0, false), Verdict::OutOfTheoremScope),
        ];
        for ((a, lo, hi, g), want) in rows {
            assert_eq!(liouville_classify(a, lo, hi, g).unwrap(), want, "a={a} lo={lo} hi={hi}");
        }
        assert!(matches!(liouville_classify(1.0, 2.0, 1.0, false), Err(LabError::Parameter(_))));
        assert_eq!(liouville_classify(-1.0, low, 1.0, false).unwrap(), Verdict::IdenticallyOne);
    }

    #[test]
    fn ode_tends_to_one_backwards() {
        for a in [1.0, 2.0] {
            for c in [1.0, -1.0, 5.0, -5.0] {
                assert!(liouville_ode_gap(a, c, -40.0 / a).unwrap() <= 1e-10);
            }
        }
    }
}
