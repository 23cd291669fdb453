//! Monodromy matrix over one coefficient period and the trace criterion.

use std::f64::consts::PI;

use super::MathieuPoint;
use crate::error::{ensure_positive, Result};
use crate::ode::{Dopri5, Dopri5Options};

/// Relative tolerance for the monodromy integration.
pub const MONODROMY_TOLERANCE: f64 = 1e-10;

/// Half-width of the band around `|trace| = 2` reported as [`Stability::Boundary`].
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Fundamental matrix at `t = π` with identity initial data.
///
/// Columns are the solutions started from `(1, 0)` and `(0, 1)`; rows are
/// displacement and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl MonodromyMatrix {
    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn determinant(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Largest Floquet multiplier modulus, assuming unit determinant.
    pub fn spectral_radius(&self) -> f64 {
        let tr = self.trace().abs();
        if tr <= 2.0 {
            1.0
        } else {
            0.5 * (tr + (tr * tr - 4.0).sqrt())
        }
    }
}

pub fn monodromy(point: MathieuPoint, tol: f64) -> Result<MonodromyMatrix> {
    ensure_positive("tol", tol)?;
    let (q, a) = (point.q(), point.a());
    let rhs = |t: f64, y: &[f64; 4], dy: &mut [f64; 4]| {
        let k = a + 2.0 * q * (2.0 * t).cos();
        dy[0] = y[1];
        dy[1] = -k * y[0];
        dy[2] = y[3];
        dy[3] = -k * y[2];
    };
    let solver = Dopri5::new(Dopri5Options {
        rtol: tol,
        atol: tol * 1e-2,
        ..Default::default()
    });
    let (y, _) = solver.solve(rhs, 0.0, [1.0, 0.0, 0.0, 1.0], PI, |_| {})?;
    Ok(MonodromyMatrix {
        m11: y[0],
        m21: y[1],
        m12: y[2],
        m22: y[3],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
    Boundary,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub class: Stability,
    pub trace_magnitude: f64,
    /// `trace_magnitude - 2`.
    pub margin: f64,
}

impl StabilityVerdict {
    fn from_trace(trace: f64, boundary: f64) -> Self {
        let trace_magnitude = trace.abs();
        let margin = trace_magnitude - 2.0;
        let class = if margin < -boundary {
            Stability::Stable
        } else if margin > boundary {
            Stability::Unstable
        } else {
            Stability::Boundary
        };
        Self {
            class,
            trace_magnitude,
            margin,
        }
    }
}

/// Classification with the default tolerances.
pub fn classify(point: MathieuPoint) -> Result<StabilityVerdict> {
    classify_with(point, MONODROMY_TOLERANCE, BOUNDARY_TOLERANCE)
}

pub fn classify_with(point: MathieuPoint, tol: f64, boundary: f64) -> Result<StabilityVerdict> {
    let m = monodromy(point, tol)?;
    Ok(StabilityVerdict::from_trace(m.trace(), boundary))
}

/// Largest Floquet multiplier modulus per period π; 1 for stable points.
pub fn growth_rate(point: MathieuPoint) -> Result<f64> {
    Ok(monodromy(point, MONODROMY_TOLERANCE)?.spectral_radius())
}

/// Amplification of the fastest-growing solution over `horizon` time units.
pub fn growth_over_horizon(point: MathieuPoint, horizon: f64) -> Result<f64> {
    ensure_positive("horizon", horizon)?;
    Ok(growth_rate(point)?.powf(horizon / PI))
}
