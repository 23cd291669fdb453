//! Python bindings for the `energy_capture` crate.

use energy_capture as ec;
use energy_capture::dynamics::{CouplingPotential, IntegrationSettings};
use energy_capture::mathieu::{CurveFamily, CurveId, MathieuPoint};
use energy_capture::resonance::{Mode, ResonanceOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: ec::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(q: f64, a: f64) -> PyResult<MathieuPoint> {
    MathieuPoint::new(q, a).map_err(py_err)
}

fn mode(number: usize) -> PyResult<Mode> {
    Mode::from_number(number).map_err(py_err)
}

fn potential(kind: &str, gamma: Option<f64>, beta: Option<f64>) -> PyResult<CouplingPotential> {
    match (kind, gamma, beta) {
        ("quadratic", None, None) => Ok(CouplingPotential::Quadratic),
        ("quartic-degenerate", None, None) => Ok(CouplingPotential::QuarticDegenerate),
        ("weighted-quadratic", Some(g), Some(b)) => CouplingPotential::weighted(g, b).map_err(py_err),
        ("weighted-quadratic", _, _) => Err(PyValueError::new_err(
            "weighted-quadratic needs gamma and beta",
        )),
        ("quadratic" | "quartic-degenerate", _, _) => Err(PyValueError::new_err(
            "gamma and beta apply only to weighted-quadratic",
        )),
        (other, _, _) => Err(PyValueError::new_err(format!(
            "unknown potential '{other}', expected quadratic, weighted-quadratic or quartic-degenerate"
        ))),
    }
}

/// Characteristic value `a_n(q)` (family "a") or `b_n(q)` (family "b").
#[pyfunction]
fn characteristic_value(family: &str, order: u32, q: f64) -> PyResult<f64> {
    let family = match family {
        "a" | "A" => CurveFamily::A,
        "b" | "B" => CurveFamily::B,
        other => {
            return Err(PyValueError::new_err(format!(
                "family must be 'a' or 'b', got '{other}'"
            )))
        }
    };
    let id = CurveId::new(family, order).map_err(py_err)?;
    ec::mathieu::characteristic_value(id, q).map_err(py_err)
}

/// Monodromy matrix over one period as `((m11, m12), (m21, m22))`.
#[pyfunction]
#[pyo3(signature = (q, a, tol = ec::mathieu::MONODROMY_TOLERANCE))]
fn monodromy(q: f64, a: f64, tol: f64) -> PyResult<((f64, f64), (f64, f64))> {
    let m = ec::mathieu::monodromy(point(q, a)?, tol).map_err(py_err)?;
    Ok(((m.m11, m.m12), (m.m21, m.m22)))
}

/// `("stable" | "unstable" | "boundary", |trace|)`.
#[pyfunction]
fn classify(q: f64, a: f64) -> PyResult<(&'static str, f64)> {
    let v = ec::mathieu::classify(point(q, a)?).map_err(py_err)?;
    Ok((v.class.as_str(), v.trace_magnitude))
}

/// Largest Floquet multiplier magnitude per period.
#[pyfunction]
fn growth_rate(q: f64, a: f64) -> PyResult<f64> {
    ec::mathieu::growth_rate(point(q, a)?).map_err(py_err)
}

#[pyclass(frozen, name = "ModeSystem")]
struct PyModeSystem {
    inner: ec::resonance::ModeSystem,
}

#[pymethods]
impl PyModeSystem {
    #[new]
    #[pyo3(signature = (mu, lambda1, lambda2, epsilon = 1e-3, x0 = 1.0))]
    fn new(mu: f64, lambda1: f64, lambda2: f64, epsilon: f64, x0: f64) -> PyResult<Self> {
        let inner =
            ec::resonance::ModeSystem::new(mu, lambda1, lambda2, epsilon, x0).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn lambda1(&self) -> f64 {
        self.inner.lambda(Mode::Z1)
    }

    #[getter]
    fn lambda2(&self) -> f64 {
        self.inner.lambda(Mode::Z2)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    fn with_x0(&self, x0: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_x0(x0).map_err(py_err)?,
        })
    }

    /// Diagram point `(q, a)` of residual mode 1 or 2.
    fn diagram_point(&self, mode_number: usize) -> PyResult<(f64, f64)> {
        let p = ec::resonance::diagram_points(&self.inner, self.inner.x0()).map_err(py_err)?;
        let p = p[mode(mode_number)?.index()];
        Ok((p.q(), p.a()))
    }

    fn __repr__(&self) -> String {
        format!(
            "ModeSystem(mu={}, lambda1={}, lambda2={}, epsilon={}, x0={})",
            self.inner.mu(),
            self.inner.lambda(Mode::Z1),
            self.inner.lambda(Mode::Z2),
            self.inner.epsilon(),
            self.inner.x0()
        )
    }
}

#[pyclass(frozen, get_all, name = "ActivatingInterval")]
struct PyInterval {
    mode: usize,
    region_order: u32,
    q_range: (f64, f64),
    x0_range: (f64, f64),
    energy_range: (f64, f64),
    truncated: bool,
}

#[pymethods]
impl PyInterval {
    fn __repr__(&self) -> String {
        format!(
            "ActivatingInterval(mode={}, region_order={}, x0_range=({}, {}){})",
            self.mode,
            self.region_order,
            self.x0_range.0,
            self.x0_range.1,
            if self.truncated { ", truncated" } else { "" }
        )
    }
}

impl From<&ec::resonance::ActivatingInterval> for PyInterval {
    fn from(iv: &ec::resonance::ActivatingInterval) -> Self {
        Self {
            mode: iv.mode.number(),
            region_order: iv.region_order,
            q_range: (iv.q_range.lo, iv.q_range.hi),
            x0_range: (iv.x0_range.lo, iv.x0_range.hi),
            energy_range: (iv.energy_range.lo, iv.energy_range.hi),
            truncated: iv.truncated,
        }
    }
}

/// Activating intervals of residual mode 1 or 2 for `0 < x0 <= x0_max`.
#[pyfunction]
fn activating_intervals(
    system: &PyModeSystem,
    mode_number: usize,
    x0_max: f64,
) -> PyResult<Vec<PyInterval>> {
    let ivs = ec::resonance::activating_intervals(
        &system.inner,
        mode(mode_number)?,
        x0_max,
        &ResonanceOptions::default(),
    )
    .map_err(py_err)?;
    Ok(ivs.iter().map(PyInterval::from).collect())
}

#[pyfunction]
fn first_stability_threshold(system: &PyModeSystem) -> PyResult<f64> {
    ec::resonance::first_stability_threshold(&system.inner).map_err(py_err)
}

#[pyclass(frozen, get_all, name = "Verdict")]
struct PyVerdict {
    capture: &'static str,
    raw_capture: &'static str,
    growth_factor: (f64, f64),
    max_amplitude: (f64, f64),
    first_crossing: (Option<f64>, Option<f64>),
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        format!(
            "Verdict(capture={}, growth_factor=({:.3}, {:.3}))",
            self.capture, self.growth_factor.0, self.growth_factor.1
        )
    }
}

#[pyclass(frozen, name = "Trajectory")]
struct PyTrajectory {
    inner: ec::dynamics::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn max_relative_drift(&self) -> f64 {
        self.inner.max_relative_drift
    }

    #[getter]
    fn degraded(&self) -> bool {
        self.inner.degraded
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    /// One of `t, y, z1, z2, vy, vz1, vz2, E`.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let s = &self.inner.samples;
        let col: Vec<f64> = match name {
            "t" => s.iter().map(|x| x.t).collect(),
            "y" => s.iter().map(|x| x.y).collect(),
            "z1" => s.iter().map(|x| x.z1).collect(),
            "z2" => s.iter().map(|x| x.z2).collect(),
            "vy" => s.iter().map(|x| x.vy).collect(),
            "vz1" => s.iter().map(|x| x.vz1).collect(),
            "vz2" => s.iter().map(|x| x.vz2).collect(),
            "E" => self.inner.energy.clone(),
            other => return Err(PyValueError::new_err(format!("unknown column '{other}'"))),
        };
        Ok(col)
    }

    #[pyo3(signature = (threshold = ec::detector::DEFAULT_THRESHOLD))]
    fn detect(&self, threshold: f64) -> PyResult<PyVerdict> {
        let v = ec::detector::detect(&self.inner, threshold).map_err(py_err)?;
        let (g1, g2) = (v.growth(Mode::Z1), v.growth(Mode::Z2));
        Ok(PyVerdict {
            capture: v.capture.as_str(),
            raw_capture: v.raw_capture.as_str(),
            growth_factor: (g1.growth_factor, g2.growth_factor),
            max_amplitude: (g1.max_amplitude, g2.max_amplitude),
            first_crossing: (g1.first_crossing, g2.first_crossing),
        })
    }
}

/// Integrates the full nonlinear system from `y = x0`, `z_i = ε x0` at rest.
#[pyfunction]
#[pyo3(signature = (system, t_end = 400.0, potential_kind = "quadratic", gamma = None, beta = None))]
fn simulate(
    py: Python<'_>,
    system: &PyModeSystem,
    t_end: f64,
    potential_kind: &str,
    gamma: Option<f64>,
    beta: Option<f64>,
) -> PyResult<PyTrajectory> {
    let p = potential(potential_kind, gamma, beta)?;
    let sys = system.inner;
    let inner = py
        .detach(move || ec::dynamics::integrate(&sys, &p, t_end, &IntegrationSettings::default()))
        .map_err(py_err)?;
    Ok(PyTrajectory { inner })
}

/// A bundled experiment: its system at the default amplitude and its amplitude grid.
#[pyfunction]
fn preset(name: &str) -> PyResult<(PyModeSystem, Vec<f64>, f64)> {
    let e = ec::harness::preset(name).map_err(py_err)?;
    Ok((PyModeSystem { inner: e.system }, e.grid, e.x0_max))
}

type SweepRow = (
    f64,
    Option<&'static str>,
    Option<&'static str>,
    &'static str,
);

/// Runs a bundled experiment's sweep; one `(x0, predicted, observed, agreement)` per amplitude.
#[pyfunction]
#[pyo3(signature = (name, t_end = None))]
fn sweep_preset(py: Python<'_>, name: &str, t_end: Option<f64>) -> PyResult<Vec<SweepRow>> {
    let mut e = ec::harness::preset(name).map_err(py_err)?;
    if let Some(t) = t_end {
        e.t_end = t;
    }
    let spec = ec::harness::commands::sweep_spec(&e).map_err(py_err)?;
    let table = py
        .detach(move || ec::detector::sweep(&spec))
        .map_err(py_err)?;
    Ok(table
        .rows
        .iter()
        .map(|r| {
            (
                r.x0,
                r.predicted.map(|p| p.as_str()),
                r.verdict.map(|v| v.capture.as_str()),
                r.agreement.as_str(),
            )
        })
        .collect())
}

#[pymodule(name = "energy_capture")]
fn energy_capture_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(characteristic_value, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(growth_rate, m)?)?;
    m.add_function(wrap_pyfunction!(activating_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(first_stability_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_preset, m)?)?;
    m.add_class::<PyModeSystem>()?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PyVerdict>()?;
    m.add_class::<PyTrajectory>()?;
    Ok(())
}
