//! The three-mode Hamiltonian system
//!
//! ```text
//! y''  + μ²  y  + U_y  = 0,   y(0)  = x0,    y'(0)  = 0
//! z1'' + λ1² z1 + U_z1 = 0,   z1(0) = ε x0,  z1'(0) = 0
//! z2'' + λ2² z2 + U_z2 = 0,   z2(0) = ε x0,  z2'(0) = 0
//! ```
//!
//! and its linearization about `(x0 cos μt, 0, 0)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use crate::error::{ensure_positive, Error, Result};
use crate::mathieu::MathieuPoint;
use crate::ode::{Dopri5, Dopri5Options, SolveStats};
use crate::resonance::{Mode, ModeSystem};

/// Coupling potential `U(y, z1, z2)`.
///
/// Implementations must be non-negative and satisfy `∇U(y, 0, 0) = 0`.
pub trait Potential: Send + Sync {
    fn value(&self, y: f64, z1: f64, z2: f64) -> f64;

    /// `(U_y, U_z1, U_z2)`.
    fn gradient(&self, y: f64, z1: f64, z2: f64) -> [f64; 3];

    /// `(U_z1z1(y,0,0), U_z2z2(y,0,0))`.
    fn axis_curvature(&self, y: f64) -> [f64; 2];

    /// Weights `κ_i` with `U_zizi(y,0,0) = κ_i y²`, when the curvature has that form.
    /// The linearization is then a pair of Mathieu equations.
    fn quadratic_axis_weights(&self) -> Option<[f64; 2]> {
        None
    }

    fn label(&self) -> String;
}

/// The built-in potential family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingPotential {
    /// `(y² z1² + y² z2² + z1² z2²) / 2`
    Quadratic,
    /// `(γ y² z1² + β y² z2² + z1² z2²) / 2`
    WeightedQuadratic { gamma: f64, beta: f64 },
    /// `(y⁴ z1⁴ + y⁴ z2⁴ + z1⁴ z2⁴) / 4`
    QuarticDegenerate,
}

impl CouplingPotential {
    pub fn weighted(gamma: f64, beta: f64) -> Result<Self> {
        ensure_positive("gamma", gamma)?;
        ensure_positive("beta", beta)?;
        Ok(Self::WeightedQuadratic { gamma, beta })
    }

    fn weights(&self) -> (f64, f64) {
        match *self {
            Self::Quadratic | Self::QuarticDegenerate => (1.0, 1.0),
            Self::WeightedQuadratic { gamma, beta } => (gamma, beta),
        }
    }

    /// True when both axis curvatures vanish identically.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::QuarticDegenerate)
    }
}

impl Potential for CouplingPotential {
    fn value(&self, y: f64, z1: f64, z2: f64) -> f64 {
        let (g, b) = self.weights();
        match self {
            Self::QuarticDegenerate => {
                let (y4, a4, b4) = (y.powi(4), z1.powi(4), z2.powi(4));
                0.25 * (y4 * a4 + y4 * b4 + a4 * b4)
            }
            _ => {
                let (y2, a2, b2) = (y * y, z1 * z1, z2 * z2);
                0.5 * (g * y2 * a2 + b * y2 * b2 + a2 * b2)
            }
        }
    }

    fn gradient(&self, y: f64, z1: f64, z2: f64) -> [f64; 3] {
        let (g, b) = self.weights();
        match self {
            Self::QuarticDegenerate => {
                let (y4, a4, b4) = (y.powi(4), z1.powi(4), z2.powi(4));
                [
                    (a4 + b4) * y.powi(3),
                    (y4 + b4) * z1.powi(3),
                    (y4 + a4) * z2.powi(3),
                ]
            }
            _ => {
                let (y2, a2, b2) = (y * y, z1 * z1, z2 * z2);
                [
                    (g * a2 + b * b2) * y,
                    (g * y2 + b2) * z1,
                    (b * y2 + a2) * z2,
                ]
            }
        }
    }

    fn axis_curvature(&self, y: f64) -> [f64; 2] {
        match self.quadratic_axis_weights() {
            Some([k1, k2]) => [k1 * y * y, k2 * y * y],
            None => [0.0, 0.0],
        }
    }

    fn quadratic_axis_weights(&self) -> Option<[f64; 2]> {
        let (g, b) = self.weights();
        Some(match self {
            Self::QuarticDegenerate => [0.0, 0.0],
            _ => [g, b],
        })
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CouplingPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => f.write_str("quadratic"),
            Self::WeightedQuadratic { gamma, beta } => {
                write!(f, "weighted-quadratic(gamma={gamma},beta={beta})")
            }
            Self::QuarticDegenerate => f.write_str("quartic-degenerate"),
        }
    }
}

/// Positions, velocities and time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub t: f64,
    pub y: f64,
    pub z1: f64,
    pub z2: f64,
    pub vy: f64,
    pub vz1: f64,
    pub vz2: f64,
}

impl State {
    /// `y = x0`, `z_i = ε x0`, all velocities zero.
    pub fn initial(system: &ModeSystem) -> Self {
        let x0 = system.x0();
        let z = system.epsilon() * x0;
        Self {
            y: x0,
            z1: z,
            z2: z,
            ..Default::default()
        }
    }

    pub fn z(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Z1 => self.z1,
            Mode::Z2 => self.z2,
        }
    }

    fn to_array(self) -> [f64; 6] {
        [self.y, self.z1, self.z2, self.vy, self.vz1, self.vz2]
    }

    fn from_array(t: f64, s: &[f64; 6]) -> Self {
        Self {
            t,
            y: s[0],
            z1: s[1],
            z2: s[2],
            vy: s[3],
            vz1: s[4],
            vz2: s[5],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.t.is_finite()
    }
}

/// Kinetic plus quadratic plus coupling energy.
pub fn total_energy<P: Potential + ?Sized>(
    state: &State,
    potential: &P,
    system: &ModeSystem,
) -> f64 {
    let (mu, l1, l2) = (
        system.mu(),
        system.lambda(Mode::Z1),
        system.lambda(Mode::Z2),
    );
    let kinetic = 0.5 * (state.vy * state.vy + state.vz1 * state.vz1 + state.vz2 * state.vz2);
    let harmonic = 0.5
        * (mu * mu * state.y * state.y
            + l1 * l1 * state.z1 * state.z1
            + l2 * l2 * state.z2 * state.z2);
    kinetic + harmonic + potential.value(state.y, state.z1, state.z2)
}

/// Integrator and sampling controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Output grid step; `None` uses `min(0.01, 2π / (20 ω_max))`.
    pub sample_step: Option<f64>,
    /// Relative energy drift above which a run is flagged degraded.
    pub drift_bound: f64,
    pub max_steps: usize,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            sample_step: None,
            drift_bound: 1e-6,
            max_steps: 50_000_000,
        }
    }
}

impl IntegrationSettings {
    fn solver(&self) -> Result<Dopri5> {
        ensure_positive("rtol", self.rtol)?;
        ensure_positive("atol", self.atol)?;
        ensure_positive("drift_bound", self.drift_bound)?;
        Ok(Dopri5::new(Dopri5Options {
            rtol: self.rtol,
            atol: self.atol,
            h_max: None,
            max_steps: self.max_steps,
        }))
    }

    pub fn sample_step_for(&self, system: &ModeSystem) -> Result<f64> {
        match self.sample_step {
            Some(dt) => {
                ensure_positive("sample_step", dt)?;
                Ok(dt)
            }
            None => {
                let w = system
                    .mu()
                    .max(system.lambda(Mode::Z1))
                    .max(system.lambda(Mode::Z2));
                Ok(0.01f64.min(2.0 * PI / (20.0 * w)))
            }
        }
    }
}

/// Uniform grid `t0, t0 + dt, ...`, closed with `t_end`.
pub fn sample_times(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let n = ((t_end - t0) / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    if let Some(&last) = times.last() {
        if t_end - last > 1e-9 * dt {
            times.push(t_end);
        } else if let Some(l) = times.last_mut() {
            *l = t_end;
        }
    }
    times
}

/// A sampled solution of the nonlinear system.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub system: ModeSystem,
    pub potential: String,
    pub settings: IntegrationSettings,
    pub samples: Vec<State>,
    pub energy: Vec<f64>,
    /// `max |E(t) - E(0)| / E(0)` (absolute when `E(0) = 0`).
    pub max_relative_drift: f64,
    /// Drift exceeded `settings.drift_bound`; data kept for inspection.
    pub degraded: bool,
    pub stats: SolveStats,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn max_abs(&self, mode: Mode) -> f64 {
        self.samples
            .iter()
            .map(|s| s.z(mode).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,y,z1,z2,vy,vz1,vz2,E`, shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,y,z1,z2,vy,vz1,vz2,E")?;
        for (s, e) in self.samples.iter().zip(&self.energy) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.t, s.y, s.z1, s.z2, s.vy, s.vz1, s.vz2, e
            )?;
        }
        Ok(())
    }
}

/// Solves the system from its standard initial data over `[0, t_end]`.
pub fn integrate<P: Potential + ?Sized>(
    system: &ModeSystem,
    potential: &P,
    t_end: f64,
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    integrate_from(system, potential, State::initial(system), t_end, settings)
}

/// Solves the system from an arbitrary initial state.
pub fn integrate_from<P: Potential + ?Sized>(
    system: &ModeSystem,
    potential: &P,
    initial: State,
    t_end: f64,
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    if !initial.is_finite() {
        return Err(Error::InvalidParameter {
            name: "initial",
            reason: "state must be finite".into(),
        });
    }
    ensure_positive("t_end - t0", t_end - initial.t)?;
    let solver = settings.solver()?;
    let dt = settings.sample_step_for(system)?;
    let times = sample_times(initial.t, t_end, dt);

    let mu2 = system.mu().powi(2);
    let l1 = system.lambda(Mode::Z1).powi(2);
    let l2 = system.lambda(Mode::Z2).powi(2);
    let rhs = |_t: f64, s: &[f64; 6], ds: &mut [f64; 6]| {
        let [gy, g1, g2] = potential.gradient(s[0], s[1], s[2]);
        ds[0] = s[3];
        ds[1] = s[4];
        ds[2] = s[5];
        ds[3] = -mu2 * s[0] - gy;
        ds[4] = -l1 * s[1] - g1;
        ds[5] = -l2 * s[2] - g2;
    };
    let (states, stats) =
        solver.solve_sampled(rhs, initial.t, initial.to_array(), t_end, &times)?;

    let samples: Vec<State> = times
        .iter()
        .zip(&states)
        .map(|(&t, s)| State::from_array(t, s))
        .collect();
    let energy: Vec<f64> = samples
        .iter()
        .map(|s| total_energy(s, potential, system))
        .collect();
    let e0 = total_energy(&initial, potential, system);
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    let max_relative_drift = energy
        .iter()
        .map(|e| (e - e0).abs() / scale)
        .fold(0.0, f64::max);

    Ok(Trajectory {
        system: *system,
        potential: potential.label(),
        settings: *settings,
        degraded: max_relative_drift.is_nan() || max_relative_drift > settings.drift_bound,
        samples,
        energy,
        max_relative_drift,
        stats,
    })
}

/// Coefficient `mean + amplitude · cos(2μt)` of a linearized residual equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathieuForm {
    pub mean: f64,
    pub amplitude: f64,
    pub mu: f64,
}

impl MathieuForm {
    pub fn eval(&self, t: f64) -> f64 {
        self.mean + self.amplitude * (2.0 * self.mu * t).cos()
    }

    /// `(q, a)` after rescaling time by `μ`.
    pub fn canonical(&self) -> Result<MathieuPoint> {
        let mu2 = self.mu * self.mu;
        MathieuPoint::new(self.amplitude / (2.0 * mu2), self.mean / mu2)
    }

    pub fn is_constant(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// The residual equations `ξ_i'' + (λ_i² + U_zizi(x0 cos μt, 0, 0)) ξ_i = 0`.
#[derive(Debug, Clone, Copy)]
pub struct Linearization<'p, P: Potential + ?Sized> {
    system: ModeSystem,
    potential: &'p P,
}

impl<P: Potential + ?Sized> Linearization<'_, P> {
    pub fn system(&self) -> &ModeSystem {
        &self.system
    }

    pub fn coefficient(&self, mode: Mode, t: f64) -> f64 {
        let y = self.system.x0() * (self.system.mu() * t).cos();
        self.system.lambda(mode).powi(2) + self.potential.axis_curvature(y)[mode.index()]
    }

    /// Closed form of the coefficient when the potential has quadratic axis curvature.
    pub fn mathieu_form(&self, mode: Mode) -> Option<MathieuForm> {
        let k = self.potential.quadratic_axis_weights()?[mode.index()];
        let half = 0.5 * k * self.system.x0().powi(2);
        Some(MathieuForm {
            mean: self.system.lambda(mode).powi(2) + half,
            amplitude: half,
            mu: self.system.mu(),
        })
    }
}

/// Builds the linearization, checking `∇U(y, 0, 0) = 0` on a grid of `y`.
pub fn linearize<'p, P: Potential + ?Sized>(
    system: &ModeSystem,
    potential: &'p P,
) -> Result<Linearization<'p, P>> {
    let reach = 2.0 * system.x0().abs() + 1.0;
    for k in 0..=32 {
        let y = -reach + 2.0 * reach * k as f64 / 32.0;
        let g = potential.gradient(y, 0.0, 0.0);
        let residual = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if residual.is_nan() || residual > 1e-12 {
            return Err(Error::AxisGradient { y, residual });
        }
    }
    Ok(Linearization {
        system: *system,
        potential,
    })
}

/// Fundamental solutions of the linearized equations, sampled uniformly.
#[derive(Debug, Clone)]
pub struct LinearizedTrajectory {
    pub times: Vec<f64>,
    /// Per mode, per sample: `[ξ_a, ξ_a', ξ_b, ξ_b']` with `ξ_a(0) = 1, ξ_a'(0) = 0`
    /// and `ξ_b(0) = 0, ξ_b'(0) = 1`.
    pub modes: [Vec<[f64; 4]>; 2],
    pub stats: SolveStats,
}

impl LinearizedTrajectory {
    /// The solution with unit displacement and zero velocity.
    pub fn xi(&self, mode: Mode) -> impl Iterator<Item = f64> + '_ {
        self.modes[mode.index()].iter().map(|s| s[0])
    }

    /// `max_t max(|ξ_a|, |ξ_b|)`.
    pub fn sup_norm(&self, mode: Mode) -> f64 {
        self.modes[mode.index()]
            .iter()
            .map(|s| s[0].abs().max(s[2].abs()))
            .fold(0.0, f64::max)
    }
}

pub fn integrate_linearized<P: Potential + ?Sized>(
    lin: &Linearization<'_, P>,
    t_end: f64,
    settings: &IntegrationSettings,
) -> Result<LinearizedTrajectory> {
    ensure_positive("t_end", t_end)?;
    let solver = settings.solver()?;
    let dt = settings.sample_step_for(lin.system())?;
    let times = sample_times(0.0, t_end, dt);
    let mut modes: [Vec<[f64; 4]>; 2] = [Vec::new(), Vec::new()];
    let mut stats = SolveStats::default();
    for mode in Mode::BOTH {
        let rhs = |t: f64, s: &[f64; 4], ds: &mut [f64; 4]| {
            let c = lin.coefficient(mode, t);
            ds[0] = s[1];
            ds[1] = -c * s[0];
            ds[2] = s[3];
            ds[3] = -c * s[2];
        };
        let (states, st) = solver.solve_sampled(rhs, 0.0, [1.0, 0.0, 0.0, 1.0], t_end, &times)?;
        stats.accepted += st.accepted;
        stats.rejected += st.rejected;
        stats.evaluations += st.evaluations;
        modes[mode.index()] = states;
    }
    Ok(LinearizedTrajectory {
        times,
        modes,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1(x0: f64, eps: f64) -> ModeSystem {
        ModeSystem::new(1.0, 0.1f64.sqrt(), 0.9f64.sqrt(), eps, x0).unwrap()
    }

    #[test]
    fn energy_examples() {
        let s = ModeSystem::new(1.0, 1.0, 1.0, 0.0, 2.0).unwrap();
        let p = CouplingPotential::Quadratic;
        assert_eq!(total_energy(&State::default(), &p, &s), 0.0);
        assert_eq!(total_energy(&State::initial(&s), &p, &s), 2.0);
        let st = State {
            y: 1.0,
            z1: 1.0,
            ..Default::default()
        };
        assert_eq!(total_energy(&st, &p, &s), 1.5);
    }

    #[test]
    fn unperturbed_solution_is_exact() {
        let s = exp1(1.0, 0.0);
        let traj = integrate(&s, &CouplingPotential::Quadratic, 50.0, &Default::default()).unwrap();
        let worst = traj
            .samples
            .iter()
            .map(|st| (st.y - st.t.cos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst:e}");
        assert!(traj.samples.iter().all(|st| st.z1 == 0.0 && st.z2 == 0.0));
        assert!(!traj.degraded);
    }

    #[test]
    fn sample_grid() {
        let t = sample_times(0.0, 1.0, 0.25);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let t = sample_times(0.0, 1.1, 0.5);
        assert_eq!(t, vec![0.0, 0.5, 1.0, 1.1]);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn default_sample_step_resolves_fastest_mode() {
        let s = ModeSystem::new(1.0, 2.0, 40.0, 0.0, 1.0).unwrap();
        let dt = IntegrationSettings::default().sample_step_for(&s).unwrap();
        assert!((dt - 2.0 * PI / 800.0).abs() < 1e-15);
        assert_eq!(
            IntegrationSettings::default()
                .sample_step_for(&exp1(1.0, 0.0))
                .unwrap(),
            0.01
        );
    }

    #[test]
    fn linearization_forms() {
        let s = ModeSystem::new(1.0, 0.1f64.sqrt(), 1.0, 0.0, 1.0).unwrap();
        let p = CouplingPotential::Quadratic;
        let lin = linearize(&s, &p).unwrap();
        let form = lin.mathieu_form(Mode::Z1).unwrap();
        assert!((form.mean - 0.6).abs() < 1e-15 && (form.amplitude - 0.5).abs() < 1e-15);
        let c = form.canonical().unwrap();
        assert!((c.a() - 0.6).abs() < 1e-15 && (c.q() - 0.25).abs() < 1e-15);
        for t in [0.0, 0.3, 1.7] {
            assert!((lin.coefficient(Mode::Z1, t) - form.eval(t)).abs() < 1e-14);
        }

        let w = CouplingPotential::weighted(2.0, 1.0).unwrap();
        let lin = linearize(&s, &w).unwrap();
        let q1 = lin.mathieu_form(Mode::Z1).unwrap().canonical().unwrap();
        let q2 = lin.mathieu_form(Mode::Z2).unwrap().canonical().unwrap();
        assert!((q1.q() - 0.5).abs() < 1e-15 && (q2.q() - 0.25).abs() < 1e-15);
        assert!((q1.a() - (0.1 + 2.0 * q1.q())).abs() < 1e-14);
        assert!((q2.a() - (1.0 + 2.0 * q2.q())).abs() < 1e-14);

        let d = CouplingPotential::QuarticDegenerate;
        let lin = linearize(&s, &d).unwrap();
        for mode in Mode::BOTH {
            let f = lin.mathieu_form(mode).unwrap();
            assert!(f.is_constant());
            assert_eq!(f.mean, s.lambda(mode).powi(2));
            assert_eq!(lin.coefficient(mode, 0.37), s.lambda(mode).powi(2));
        }
    }

    #[derive(Debug)]
    struct Tilted;

    impl Potential for Tilted {
        fn value(&self, y: f64, z1: f64, _z2: f64) -> f64 {
            (y + z1).powi(2)
        }
        fn gradient(&self, y: f64, z1: f64, _z2: f64) -> [f64; 3] {
            [2.0 * (y + z1), 2.0 * (y + z1), 0.0]
        }
        fn axis_curvature(&self, _y: f64) -> [f64; 2] {
            [2.0, 0.0]
        }
        fn label(&self) -> String {
            "tilted".into()
        }
    }

    #[test]
    fn axis_gradient_violation_is_reported() {
        let err = linearize(&exp1(1.0, 0.0), &Tilted).unwrap_err();
        assert!(matches!(err, Error::AxisGradient { .. }));
    }

    #[test]
    fn linearized_constant_coefficient_is_cosine() {
        let s = exp1(1.0, 0.0);
        let d = CouplingPotential::QuarticDegenerate;
        let lin = linearize(&s, &d).unwrap();
        let traj = integrate_linearized(&lin, 20.0, &Default::default()).unwrap();
        let l = s.lambda(Mode::Z2);
        let worst = traj
            .times
            .iter()
            .zip(traj.xi(Mode::Z2))
            .map(|(t, x)| (x - (l * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst:e}");
    }

    #[test]
    fn csv_layout() {
        let s = exp1(1.0, 1e-3);
        let settings = IntegrationSettings {
            sample_step: Some(0.5),
            ..Default::default()
        };
        let traj = integrate(&s, &CouplingPotential::Quadratic, 1.0, &settings).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,y,z1,z2,vy,vz1,vz2,E"));
        assert!(lines.next().unwrap().starts_with("0,1,0.001,0.001,0,0,0,"));
        assert_eq!(text.lines().count(), 4);
    }
}
