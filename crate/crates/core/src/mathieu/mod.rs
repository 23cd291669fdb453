//! Mathieu equation `w'' + (a + 2q cos 2t) w = 0`: characteristic curves and
//! Floquet stability of parameter points.

mod characteristic;
mod floquet;

pub use characteristic::{characteristic_value, CurveFamily, CurveId};
pub use floquet::{
    classify, classify_with, growth_over_horizon, growth_rate, monodromy, MonodromyMatrix,
    Stability, StabilityVerdict, BOUNDARY_TOLERANCE, MONODROMY_TOLERANCE,
};

use crate::error::{ensure_finite, ensure_non_negative, Result};

/// A parameter pair `(q, a)` of the Mathieu diagram, with `q >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathieuPoint {
    q: f64,
    a: f64,
}

impl MathieuPoint {
    pub fn new(q: f64, a: f64) -> Result<Self> {
        ensure_non_negative("q", q)?;
        ensure_finite("a", a)?;
        Ok(Self { q, a })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// Stability read off the ordered characteristic values, used as the second
/// route next to the monodromy trace.
///
/// Returns `None` when `a` is within `tol` of a curve.
pub fn classify_by_curves(point: MathieuPoint, tol: f64) -> Result<Option<Stability>> {
    let (q, a) = (point.q, point.a);
    let a0 = characteristic_value(CurveId::a(0), q)?;
    if (a - a0).abs() <= tol {
        return Ok(None);
    }
    if a < a0 {
        return Ok(Some(Stability::Unstable));
    }
    // a > a_0: walk up b_1 < a_1 < b_2 < a_2 < ...
    let mut n = 1;
    loop {
        let b = characteristic_value(CurveId::b(n), q)?;
        let an = characteristic_value(CurveId::a(n), q)?;
        if (a - b).abs() <= tol || (a - an).abs() <= tol {
            return Ok(None);
        }
        if a < b {
            return Ok(Some(Stability::Stable));
        }
        if a < an {
            return Ok(Some(Stability::Unstable));
        }
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_validation() {
        assert!(MathieuPoint::new(-1e-3, 1.0).is_err());
        assert!(MathieuPoint::new(0.0, f64::INFINITY).is_err());
        let p = MathieuPoint::new(0.25, -3.0).unwrap();
        assert_eq!((p.q(), p.a()), (0.25, -3.0));
    }

    #[test]
    fn bracketing_small_cases() {
        let p = |q, a| MathieuPoint::new(q, a).unwrap();
        assert_eq!(
            classify_by_curves(p(0.05, 1.0), 1e-9).unwrap(),
            Some(Stability::Unstable)
        );
        assert_eq!(
            classify_by_curves(p(0.05, 0.5), 1e-9).unwrap(),
            Some(Stability::Stable)
        );
        assert_eq!(
            classify_by_curves(p(0.05, -1.0), 1e-9).unwrap(),
            Some(Stability::Unstable)
        );
        assert_eq!(classify_by_curves(p(0.0, 4.0), 1e-9).unwrap(), None);
    }
}
