//! Empirical energy-capture verdicts from nonlinear runs, and sweeps that set
//! them against the predicted activating intervals.

use std::io::Write;

use rayon::prelude::*;

use crate::dynamics::{integrate, CouplingPotential, IntegrationSettings, Potential, Trajectory};
use crate::error::{Error, Result};
use crate::resonance::{
    activating_intervals_weighted, predicted_capture, q_of_amplitude, ActivatingInterval, Capture,
    Mode, ModeSystem, ResonanceOptions,
};

/// "One order of magnitude".
pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Width in `x0` below which an activating interval is not expected to show.
pub const NARROW_WIDTH: f64 = 0.05;

/// Distance in `x0` from an interval endpoint inside which disagreements are excused.
pub const ENDPOINT_MARGIN: f64 = 0.05;

/// Share of the total energy the dominating mode must keep, up to a residual
/// mode's threshold crossing, for that crossing to count as capture from it.
pub const DOMINANCE_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGrowth {
    pub initial_amplitude: f64,
    pub max_amplitude: f64,
    /// `max_t |z_i(t)| / |z_i(0)|`.
    pub growth_factor: f64,
    /// First sample time with `|z_i| >= threshold · |z_i(0)|`.
    pub first_crossing: Option<f64>,
    /// Smallest energy share of `y` over `[0, first_crossing]`.
    pub dominating_share: Option<f64>,
}

impl ModeGrowth {
    /// Crossed the threshold while `y` still held the energy.
    pub fn captured_from_dominating(&self) -> bool {
        self.dominating_share
            .is_some_and(|share| share >= DOMINANCE_SHARE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmceVerdict {
    pub threshold: f64,
    pub modes: [ModeGrowth; 2],
    /// Modes that captured energy from the dominating mode.
    pub capture: Capture,
    /// Modes that crossed the threshold at all, including transfer between
    /// residual modes after one of them has drained `y`.
    pub raw_capture: Capture,
}

impl RmceVerdict {
    pub fn growth(&self, mode: Mode) -> &ModeGrowth {
        &self.modes[mode.index()]
    }
}

/// Which residual modes grew by at least `threshold` over the run.
///
/// A crossing counts toward [`RmceVerdict::capture`] only if `y` kept at least
/// [`DOMINANCE_SHARE`] of the energy until then; later growth fed by the other
/// residual mode shows up in [`RmceVerdict::raw_capture`] only.
pub fn detect(trajectory: &Trajectory, threshold: f64) -> Result<RmceVerdict> {
    if !(threshold.is_finite() && threshold > 1.0) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("must be a finite growth factor > 1, got {threshold}"),
        });
    }
    let first = trajectory.samples.first().ok_or(Error::InvalidParameter {
        name: "trajectory",
        reason: "no samples".into(),
    })?;
    let mut modes = [ModeGrowth {
        initial_amplitude: 0.0,
        max_amplitude: 0.0,
        growth_factor: 0.0,
        first_crossing: None,
        dominating_share: None,
    }; 2];
    let mu2 = trajectory.system.mu().powi(2);
    let shares: Vec<f64> = trajectory
        .samples
        .iter()
        .zip(&trajectory.energy)
        .map(|(s, &e)| {
            let ey = 0.5 * (s.vy * s.vy + mu2 * s.y * s.y);
            if e > 0.0 {
                ey / e
            } else {
                1.0
            }
        })
        .collect();
    for mode in Mode::BOTH {
        let z0 = first.z(mode).abs();
        if z0 == 0.0 {
            return Err(Error::ZeroResidualAmplitude {
                mode: mode.number(),
            });
        }
        let bar = threshold * z0;
        let mut max_amplitude: f64 = 0.0;
        let mut first_crossing = None;
        let mut dominating_share = None;
        let mut min_share = f64::INFINITY;
        for (s, &share) in trajectory.samples.iter().zip(&shares) {
            let z = s.z(mode).abs();
            max_amplitude = max_amplitude.max(z);
            if first_crossing.is_none() {
                min_share = min_share.min(share);
                if z >= bar {
                    first_crossing = Some(s.t);
                    dominating_share = Some(min_share);
                }
            }
        }
        modes[mode.index()] = ModeGrowth {
            initial_amplitude: z0,
            max_amplitude,
            growth_factor: max_amplitude / z0,
            first_crossing,
            dominating_share,
        };
    }
    let capture = Capture::from_flags(
        modes[0].captured_from_dominating(),
        modes[1].captured_from_dominating(),
    );
    let raw_capture = Capture::from_flags(
        modes[0].first_crossing.is_some(),
        modes[1].first_crossing.is_some(),
    );
    Ok(RmceVerdict {
        threshold,
        modes,
        capture,
        raw_capture,
    })
}

/// Inputs of an amplitude sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// `x0` of the template is ignored.
    pub template: ModeSystem,
    pub potential: CouplingPotential,
    pub grid: Vec<f64>,
    pub t_end: f64,
    pub settings: IntegrationSettings,
    pub threshold: f64,
    pub resonance: ResonanceOptions,
}

/// Outcome of comparing a verdict with its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Disagree,
    /// Disagreement within [`ENDPOINT_MARGIN`] of an endpoint or inside a narrow interval.
    Excused,
    /// The run failed or drifted; no comparison.
    Degraded,
    /// No straight-line prediction for this potential.
    Unpredicted,
}

impl Agreement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Agreement::Agree => "agree",
            Agreement::Disagree => "disagree",
            Agreement::Excused => "excused",
            Agreement::Degraded => "degraded",
            Agreement::Unpredicted => "unpredicted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x0: f64,
    pub q: f64,
    pub energy: f64,
    pub predicted: Option<Capture>,
    pub verdict: Option<RmceVerdict>,
    pub max_relative_drift: Option<f64>,
    pub error: Option<String>,
    pub agreement: Agreement,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub intervals: Vec<ActivatingInterval>,
    pub rows: Vec<SweepRow>,
}

/// Predicted intervals for the potential, or `None` when the linearization is
/// not a Mathieu system with a moving abscissa.
pub fn predicted_intervals(
    template: &ModeSystem,
    potential: &CouplingPotential,
    x0_max: f64,
    opts: &ResonanceOptions,
) -> Result<Option<Vec<ActivatingInterval>>> {
    let Some(weights) = potential.quadratic_axis_weights() else {
        return Ok(None);
    };
    if weights.iter().any(|&w| w <= 0.0) {
        return Ok(None);
    }
    let mut out = Vec::new();
    for mode in Mode::BOTH {
        out.extend(activating_intervals_weighted(
            template,
            mode,
            weights[mode.index()],
            x0_max,
            opts,
        )?);
    }
    Ok(Some(out))
}

fn excused(intervals: &[ActivatingInterval], x0: f64) -> bool {
    intervals.iter().any(|iv| {
        iv.x0_range.distance_to_endpoint(x0) < ENDPOINT_MARGIN
            || (iv.x0_range.contains(x0) && iv.x0_range.width() < NARROW_WIDTH)
    })
}

/// Runs every grid amplitude in parallel; rows come back in grid order.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "must not be empty".into(),
        });
    }
    let x0_max = spec.grid.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // Search past the last amplitude so its interval is not cut at the point itself.
    let intervals = if x0_max > 0.0 {
        predicted_intervals(
            &spec.template,
            &spec.potential,
            x0_max + ENDPOINT_MARGIN,
            &spec.resonance,
        )?
    } else {
        Some(Vec::new())
    };
    let mu = spec.template.mu();

    let rows = spec
        .grid
        .par_iter()
        .map(|&x0| {
            let predicted = intervals.as_ref().map(|ivs| predicted_capture(ivs, x0));
            let run = spec
                .template
                .with_x0(x0)
                .and_then(|sys| integrate(&sys, &spec.potential, spec.t_end, &spec.settings))
                .and_then(|traj| Ok((detect(&traj, spec.threshold)?, traj)));
            let (verdict, drift, error, degraded) = match run {
                Ok((v, traj)) => (
                    Some(v),
                    Some(traj.max_relative_drift),
                    traj.degraded
                        .then(|| format!("energy drift {:e} above bound", traj.max_relative_drift)),
                    traj.degraded,
                ),
                Err(e) => (None, None, Some(e.to_string()), true),
            };
            let agreement = match (predicted, verdict) {
                _ if degraded => Agreement::Degraded,
                (None, _) => Agreement::Unpredicted,
                (Some(p), Some(v)) if p == v.capture => Agreement::Agree,
                (Some(_), Some(_)) if excused(intervals.as_deref().unwrap_or(&[]), x0) => {
                    Agreement::Excused
                }
                (Some(_), Some(_)) => Agreement::Disagree,
                (Some(_), None) => Agreement::Degraded,
            };
            SweepRow {
                x0,
                q: q_of_amplitude(mu, x0),
                energy: spec
                    .template
                    .with_x0(x0)
                    .map(|s| s.energy())
                    .unwrap_or(f64::NAN),
                predicted,
                verdict,
                max_relative_drift: drift,
                error,
                agreement,
            }
        })
        .collect();

    Ok(SweepTable {
        intervals: intervals.unwrap_or_default(),
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepTable {
    /// CSV with header
    /// `x0,q,E,predicted_mode1_active,predicted_mode2_active,G1,G2,t_cross1,t_cross2,verdict,agreement`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "x0,q,E,predicted_mode1_active,predicted_mode2_active,G1,G2,t_cross1,t_cross2,verdict,agreement"
        )?;
        for r in &self.rows {
            let pred = |m: Mode| {
                r.predicted
                    .map(|p| p.includes(m).to_string())
                    .unwrap_or_default()
            };
            let g = |m: Mode| opt(r.verdict.map(|v| v.growth(m).growth_factor));
            let tc = |m: Mode| opt(r.verdict.and_then(|v| v.growth(m).first_crossing));
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.x0,
                r.q,
                r.energy,
                pred(Mode::Z1),
                pred(Mode::Z2),
                g(Mode::Z1),
                g(Mode::Z2),
                tc(Mode::Z1),
                tc(Mode::Z2),
                r.verdict.map(|v| v.capture.as_str()).unwrap_or("error"),
                r.agreement.as_str(),
            )?;
        }
        Ok(())
    }

    /// Rows whose comparison counts: agreements and hard disagreements.
    pub fn checked_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows
            .iter()
            .filter(|r| matches!(r.agreement, Agreement::Agree | Agreement::Disagree))
    }
}
