//! Parametric lines `a = λ_i²/μ² + 2q` in the Mathieu diagram and the energy
//! ranges over which each residual mode is activated.
//!
//! Along a characteristic curve `|da/dq| < 2`, so `line(q) - curve(q)` is
//! strictly increasing: every line meets every curve above its intercept
//! exactly once, and the crossings alternate `b_n < a_n < b_{n+1} < ...`.

use std::fmt;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::mathieu::{characteristic_value, CurveId, MathieuPoint};

/// Residual mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Z1,
    Z2,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Z1, Mode::Z2];

    /// 1 or 2.
    pub fn number(&self) -> usize {
        match self {
            Mode::Z1 => 1,
            Mode::Z2 => 2,
        }
    }

    pub fn index(&self) -> usize {
        self.number() - 1
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Mode::Z1),
            2 => Ok(Mode::Z2),
            _ => Err(Error::InvalidParameter {
                name: "mode",
                reason: format!("must be 1 or 2, got {n}"),
            }),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}", self.number())
    }
}

/// Physical configuration: frequencies `μ, λ1, λ2`, residual amplitude ratio
/// `ε` and dominating amplitude `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSystem {
    mu: f64,
    lambda: [f64; 2],
    epsilon: f64,
    x0: f64,
}

impl ModeSystem {
    pub fn new(mu: f64, lambda1: f64, lambda2: f64, epsilon: f64, x0: f64) -> Result<Self> {
        ensure_positive("mu", mu)?;
        ensure_positive("lambda1", lambda1)?;
        ensure_positive("lambda2", lambda2)?;
        ensure_non_negative("epsilon", epsilon)?;
        crate::error::ensure_finite("x0", x0)?;
        Ok(Self {
            mu,
            lambda: [lambda1, lambda2],
            epsilon,
            x0,
        })
    }

    /// Same system with a different dominating amplitude.
    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        Self::new(self.mu, self.lambda[0], self.lambda[1], self.epsilon, x0)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.mu, self.lambda[0], self.lambda[1], epsilon, self.x0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self, mode: Mode) -> f64 {
        self.lambda[mode.index()]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Energy of the unperturbed dominating oscillation, `μ² x0² / 2`.
    pub fn energy(&self) -> f64 {
        energy_of_amplitude(self.mu, self.x0)
    }
}

/// The line `a = intercept + 2q` traced by one residual mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricLine {
    pub mode: Mode,
    pub intercept: f64,
}

impl ParametricLine {
    pub const SLOPE: f64 = 2.0;

    pub fn at(&self, q: f64) -> f64 {
        self.intercept + Self::SLOPE * q
    }

    pub fn point(&self, q: f64) -> Result<MathieuPoint> {
        MathieuPoint::new(q, self.at(q))
    }

    /// Lowest region order the line can enter: the smallest `n` with `n² > intercept`.
    pub fn first_region_order(&self) -> u32 {
        let mut n = self.intercept.max(0.0).sqrt().floor() as u32;
        while (n as f64) * (n as f64) <= self.intercept {
            n += 1;
        }
        n.max(1)
    }
}

pub fn line_of(system: &ModeSystem, mode: Mode) -> ParametricLine {
    let r = system.lambda(mode) / system.mu();
    ParametricLine {
        mode,
        intercept: r * r,
    }
}

/// `E = μ² x0² / 2`.
pub fn energy_of_amplitude(mu: f64, x0: f64) -> f64 {
    0.5 * mu * mu * x0 * x0
}

/// Non-negative `x0` with `energy_of_amplitude(mu, x0) = energy`.
pub fn amplitude_of_energy(mu: f64, energy: f64) -> Result<f64> {
    ensure_positive("mu", mu)?;
    ensure_non_negative("energy", energy)?;
    Ok((2.0 * energy).sqrt() / mu)
}

/// `q = x0² / (4 μ²)`.
pub fn q_of_amplitude(mu: f64, x0: f64) -> f64 {
    x0 * x0 / (4.0 * mu * mu)
}

/// Non-negative `x0 = 2 μ sqrt(q)`.
pub fn amplitude_of_q(mu: f64, q: f64) -> f64 {
    2.0 * mu * q.max(0.0).sqrt()
}

/// `E = 2 μ⁴ q`.
pub fn energy_of_q(mu: f64, q: f64) -> f64 {
    2.0 * mu.powi(4) * q
}

/// The two diagram points `(q(x0), α_i(x0))`.
pub fn diagram_points(system: &ModeSystem, x0: f64) -> Result<[MathieuPoint; 2]> {
    let q = q_of_amplitude(system.mu(), x0);
    Ok([
        line_of(system, Mode::Z1).point(q)?,
        line_of(system, Mode::Z2).point(q)?,
    ])
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn distance_to_endpoint(&self, x: f64) -> f64 {
        (x - self.lo).abs().min((x - self.hi).abs())
    }
}

/// A maximal range of `q` (equivalently `x0`, `E`) on which one mode's line
/// crosses the instability region `U_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivatingInterval {
    pub mode: Mode,
    pub region_order: u32,
    pub q_range: Interval,
    pub x0_range: Interval,
    pub energy_range: Interval,
    /// The upper end was cut at the scan limit rather than at `a_n`.
    pub truncated: bool,
}

/// Root-finding controls for line/curve crossings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceOptions {
    /// Coarse scan step in `q`.
    pub scan_step: f64,
    /// Final bracket width in `q`.
    pub q_tol: f64,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        Self {
            scan_step: 1e-3,
            q_tol: 1e-6,
        }
    }
}

impl ResonanceOptions {
    fn validate(&self) -> Result<()> {
        ensure_positive("scan_step", self.scan_step)?;
        ensure_positive("q_tol", self.q_tol)
    }
}

fn bisect(g: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, q_tol: f64) -> Result<f64> {
    while hi - lo > q_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Abscissa in `[q_start, q_limit]` where `line` meets `curve`, if it does.
///
/// Scans forward from `q_start` with `scan_step` until `line - curve` turns
/// non-negative, then bisects. Returns `Some(q_start)` when the line is
/// already on or above the curve there.
pub fn line_crossing(
    line: &ParametricLine,
    curve: CurveId,
    q_start: f64,
    q_limit: f64,
    opts: &ResonanceOptions,
) -> Result<Option<f64>> {
    opts.validate()?;
    ensure_non_negative("q_start", q_start)?;
    let g = |q: f64| characteristic_value(curve, q).map(|c| line.at(q) - c);
    if g(q_start)? >= 0.0 {
        return Ok(Some(q_start));
    }
    let mut prev = q_start;
    let mut k = 1u64;
    while prev < q_limit {
        let q = (q_start + k as f64 * opts.scan_step).min(q_limit);
        if g(q)? >= 0.0 {
            return bisect(&g, prev, q, opts.q_tol).map(Some);
        }
        prev = q;
        k += 1;
    }
    Ok(None)
}

/// Crossing with no upper limit, bracketed by step doubling.
fn unbounded_crossing(
    line: &ParametricLine,
    curve: CurveId,
    opts: &ResonanceOptions,
) -> Result<f64> {
    const Q_CEILING: f64 = 1e8;
    let g = |q: f64| characteristic_value(curve, q).map(|c| line.at(q) - c);
    let mut prev = 0.0;
    let mut q = opts.scan_step;
    while q <= Q_CEILING {
        if g(q)? >= 0.0 {
            return bisect(&g, prev, q, opts.q_tol);
        }
        prev = q;
        q *= 2.0;
    }
    Err(Error::BracketNotFound {
        curve: curve.to_string(),
        q_limit: Q_CEILING,
        step: opts.scan_step,
    })
}

/// Activating intervals of `mode` for `0 < x0 <= x0_max`, sorted by `q`.
pub fn activating_intervals(
    system: &ModeSystem,
    mode: Mode,
    x0_max: f64,
    opts: &ResonanceOptions,
) -> Result<Vec<ActivatingInterval>> {
    activating_intervals_weighted(system, mode, 1.0, x0_max, opts)
}

/// As [`activating_intervals`] for a coupling `weight · y² z_i² / 2`, where the
/// diagram abscissa is `q_i = weight · x0² / (4μ²)`.
pub fn activating_intervals_weighted(
    system: &ModeSystem,
    mode: Mode,
    weight: f64,
    x0_max: f64,
    opts: &ResonanceOptions,
) -> Result<Vec<ActivatingInterval>> {
    ensure_positive("x0_max", x0_max)?;
    ensure_positive("weight", weight)?;
    opts.validate()?;
    let mu = system.mu();
    let q_max = weight * q_of_amplitude(mu, x0_max);
    let line = line_of(system, mode);
    let to_x0 = |q: f64| amplitude_of_q(mu, q / weight);
    let to_energy = |q: f64| energy_of_q(mu, q / weight);

    let mut out = Vec::new();
    let mut cursor = 0.0;
    let mut n = line.first_region_order();
    // Curves start at n² and bend down, so beyond this bound none can be met.
    while (n as f64).powi(2) <= line.at(q_max) + 4.0 {
        let Some(lo) = line_crossing(&line, CurveId::b(n), cursor, q_max, opts)? else {
            break;
        };
        let (hi, truncated) = match line_crossing(&line, CurveId::a(n), lo, q_max, opts)? {
            Some(hi) => (hi, false),
            None => (q_max, true),
        };
        if hi > lo {
            out.push(ActivatingInterval {
                mode,
                region_order: n,
                q_range: Interval { lo, hi },
                x0_range: Interval {
                    lo: to_x0(lo),
                    hi: to_x0(hi),
                },
                energy_range: Interval {
                    lo: to_energy(lo),
                    hi: to_energy(hi),
                },
                truncated,
            });
        }
        if truncated {
            break;
        }
        cursor = hi;
        n += 1;
    }
    Ok(out)
}

/// Energy below which both residual modes are non-activating: the smaller of
/// the two energies at which a line first leaves its starting stability region.
pub fn first_stability_threshold(system: &ModeSystem) -> Result<f64> {
    first_stability_threshold_with(system, &ResonanceOptions::default())
}

pub fn first_stability_threshold_with(system: &ModeSystem, opts: &ResonanceOptions) -> Result<f64> {
    opts.validate()?;
    let mut best = f64::INFINITY;
    for mode in Mode::BOTH {
        let line = line_of(system, mode);
        let q = unbounded_crossing(&line, CurveId::b(line.first_region_order()), opts)?;
        best = best.min(energy_of_q(system.mu(), q));
    }
    Ok(best)
}

/// Which residual modes capture (or are predicted to capture) energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Capture {
    None,
    Z1,
    Z2,
    Both,
}

impl Capture {
    pub fn from_flags(z1: bool, z2: bool) -> Self {
        match (z1, z2) {
            (false, false) => Capture::None,
            (true, false) => Capture::Z1,
            (false, true) => Capture::Z2,
            (true, true) => Capture::Both,
        }
    }

    pub fn includes(&self, mode: Mode) -> bool {
        matches!(
            (self, mode),
            (Capture::Both, _) | (Capture::Z1, Mode::Z1) | (Capture::Z2, Mode::Z2)
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Capture::None => "none",
            Capture::Z1 => "z1",
            Capture::Z2 => "z2",
            Capture::Both => "both",
        }
    }
}

impl fmt::Display for Capture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Prediction at a single amplitude from per-mode interval lists.
pub fn predicted_capture(intervals: &[ActivatingInterval], x0: f64) -> Capture {
    let active = |m: Mode| {
        intervals
            .iter()
            .any(|iv| iv.mode == m && iv.x0_range.contains(x0.abs()))
    };
    Capture::from_flags(active(Mode::Z1), active(Mode::Z2))
}

/// One piece of the partition of `[0, x0_max]` by interval endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub x0_range: Interval,
    pub capture: Capture,
    /// The band lies inside an activating interval narrower than the
    /// visibility width.
    pub narrow: bool,
}

/// Partitions `[0, x0_max]` at every interval endpoint and labels each piece
/// by which modes are active there. Adjacent pieces with equal labels are merged
/// only when neither is narrow.
pub fn capture_bands(
    intervals: &[ActivatingInterval],
    x0_max: f64,
    narrow_width: f64,
) -> Vec<Band> {
    let mut cuts = vec![0.0, x0_max];
    for iv in intervals {
        for x in [iv.x0_range.lo, iv.x0_range.hi] {
            if x > 0.0 && x < x0_max {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut bands: Vec<Band> = Vec::new();
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let capture = predicted_capture(intervals, mid);
        let narrow = intervals
            .iter()
            .any(|iv| iv.x0_range.contains(mid) && iv.x0_range.width() < narrow_width);
        match bands.last_mut() {
            Some(last) if last.capture == capture && !last.narrow && !narrow => {
                last.x0_range.hi = w[1];
            }
            _ => bands.push(Band {
                x0_range: Interval { lo: w[0], hi: w[1] },
                capture,
                narrow,
            }),
        }
    }
    bands
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> ModeSystem {
        ModeSystem::new(1.0, 0.1f64.sqrt(), 0.9f64.sqrt(), 1e-3, 1.0).unwrap()
    }

    #[test]
    fn system_validation() {
        assert!(ModeSystem::new(0.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ModeSystem::new(1.0, -1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ModeSystem::new(1.0, 1.0, 1.0, -0.1, 1.0).is_err());
        assert!(ModeSystem::new(1.0, 1.0, 1.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn lines() {
        let s = exp1();
        assert!((line_of(&s, Mode::Z1).intercept - 0.1).abs() < 1e-15);
        assert!((line_of(&s, Mode::Z2).intercept - 0.9).abs() < 1e-15);
        let s3 = ModeSystem::new(0.5f64.sqrt(), 2.0, 4.0, 1e-2, 1.0).unwrap();
        assert!((line_of(&s3, Mode::Z1).intercept - 8.0).abs() < 1e-12);
        // line at q(x0) reproduces (2λ² + x0²)/(2μ²)
        for x0 in [0.3, 1.0, 2.5] {
            let q = q_of_amplitude(s3.mu(), x0);
            let direct = (2.0 * 4.0 + x0 * x0) / (2.0 * 0.5);
            assert!((line_of(&s3, Mode::Z1).at(q) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn first_region_order() {
        let l = |c| ParametricLine {
            mode: Mode::Z1,
            intercept: c,
        };
        assert_eq!(l(0.1).first_region_order(), 1);
        assert_eq!(l(0.0).first_region_order(), 1);
        assert_eq!(l(4.0).first_region_order(), 3);
        assert_eq!(l(16.0).first_region_order(), 5);
        assert_eq!(l(32.0).first_region_order(), 6);
    }

    #[test]
    fn conversions() {
        assert!((energy_of_q(1.0, 0.033) - 0.066).abs() < 1e-12);
        assert_eq!(energy_of_amplitude(1.0, 0.0), 0.0);
        assert_eq!(q_of_amplitude(1.0, 0.0), 0.0);
        assert!((q_of_amplitude(1.0, 0.36) - 0.0324).abs() < 1e-12);
        assert!((energy_of_amplitude(1.0, 0.36) - 0.0648).abs() < 1e-12);
        assert!(amplitude_of_energy(1.0, -1.0).is_err());
    }

    #[test]
    fn diagram_point_examples() {
        let s = exp1();
        let [_, p2] = diagram_points(&s, 0.63).unwrap();
        assert!((p2.q() - 0.099225).abs() < 1e-12);
        assert!((p2.a() - 1.09845).abs() < 1e-12);
        let [p1, _] = diagram_points(&s, 1.1).unwrap();
        assert!((p1.q() - 0.3025).abs() < 1e-12 && (p1.a() - 0.705).abs() < 1e-12);
        let [p1, p2] = diagram_points(&s, 0.0).unwrap();
        assert_eq!((p1.q(), p2.q()), (0.0, 0.0));
        assert!((p2.a() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn x0_max_must_be_positive() {
        let opts = ResonanceOptions::default();
        assert!(activating_intervals(&exp1(), Mode::Z1, 0.0, &opts).is_err());
    }

    #[test]
    fn truncated_interval_is_flagged() {
        let ivs =
            activating_intervals(&exp1(), Mode::Z1, 3.0, &ResonanceOptions::default()).unwrap();
        assert_eq!(ivs.len(), 2);
        assert!(!ivs[0].truncated);
        assert!(ivs[1].truncated);
        assert!((ivs[1].x0_range.hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bands_follow_set_algebra() {
        let mk = |mode, lo: f64, hi: f64| ActivatingInterval {
            mode,
            region_order: 1,
            q_range: Interval { lo, hi },
            x0_range: Interval { lo, hi },
            energy_range: Interval { lo, hi },
            truncated: false,
        };
        let ivs = [
            mk(Mode::Z2, 1.0, 2.0),
            mk(Mode::Z1, 1.5, 3.0),
            mk(Mode::Z2, 3.5, 3.51),
        ];
        let bands = capture_bands(&ivs, 4.0, 0.05);
        let labels: Vec<_> = bands.iter().map(|b| (b.capture, b.narrow)).collect();
        assert_eq!(
            labels,
            vec![
                (Capture::None, false),
                (Capture::Z2, false),
                (Capture::Both, false),
                (Capture::Z1, false),
                (Capture::None, false),
                (Capture::Z2, true),
                (Capture::None, false),
            ]
        );
        assert_eq!(predicted_capture(&ivs, 1.75), Capture::Both);
        assert_eq!(predicted_capture(&ivs, 1.0), Capture::None);
    }
}
