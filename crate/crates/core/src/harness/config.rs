//! TOML experiment descriptions and the built-in presets.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::detector::DEFAULT_THRESHOLD;
use crate::dynamics::{CouplingPotential, IntegrationSettings};
use crate::error::{Error, Result};
use crate::resonance::ModeSystem;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub system: SystemSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub amplitudes: AmplitudeSection,
    #[serde(default)]
    pub integration: IntegrationSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub diagram: DiagramSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Frequencies may be given directly or squared, not both.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub mu: Option<f64>,
    pub mu_squared: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda1_squared: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda2_squared: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    #[default]
    Quadratic,
    WeightedQuadratic,
    QuarticDegenerate,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub kind: PotentialKind,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
}

/// Either an explicit `grid` or `grid_start..=grid_stop` by `grid_step`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSection {
    /// Amplitude for single runs.
    pub x0: Option<f64>,
    /// Upper end of the interval search; defaults to the largest grid value.
    pub x0_max: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSection {
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    pub sample_step: Option<f64>,
    pub drift_bound: f64,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        let s = IntegrationSettings::default();
        Self {
            t_end: 400.0,
            rtol: s.rtol,
            atol: s.atol,
            sample_step: None,
            drift_bound: s.drift_bound,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub threshold: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagramSection {
    pub q_max: Option<f64>,
    pub a_min: f64,
    pub a_max: Option<f64>,
    pub resolution: usize,
}

impl Default for DiagramSection {
    fn default() -> Self {
        Self {
            q_max: None,
            a_min: -1.0,
            a_max: None,
            resolution: 100,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Axis ranges and grid size of a stability diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramSpec {
    pub q_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub resolution: usize,
}

impl DiagramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_max.is_finite() && self.q_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "q_max",
                reason: format!("must be positive and finite, got {}", self.q_max),
            });
        }
        if !(self.a_max.is_finite() && self.a_min.is_finite() && self.a_max > self.a_min) {
            return Err(Error::InvalidParameter {
                name: "a_max",
                reason: format!("must exceed a_min = {}, got {}", self.a_min, self.a_max),
            });
        }
        if self.resolution < 2 {
            return Err(Error::InvalidParameter {
                name: "resolution",
                reason: format!("need at least 2 cells per axis, got {}", self.resolution),
            });
        }
        Ok(())
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    /// System at the single-run amplitude (or 1 when none is given).
    pub system: ModeSystem,
    pub potential: CouplingPotential,
    pub x0: Option<f64>,
    pub x0_max: f64,
    pub grid: Vec<f64>,
    pub t_end: f64,
    pub settings: IntegrationSettings,
    pub threshold: f64,
    pub diagram: DiagramSpec,
    pub output_dir: Option<PathBuf>,
}

pub const PRESET_NAMES: [&str; 3] = ["experiment1", "experiment2", "experiment3"];

/// TOML source of a built-in preset.
pub fn preset_source(name: &str) -> Result<&'static str> {
    match name {
        "experiment1" => Ok(include_str!("../../presets/experiment1.toml")),
        "experiment2" => Ok(include_str!("../../presets/experiment2.toml")),
        "experiment3" => Ok(include_str!("../../presets/experiment3.toml")),
        other => Err(Error::Config(format!(
            "unknown preset '{other}', expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub fn preset(name: &str) -> Result<Experiment> {
    ExperimentConfig::parse(preset_source(name)?)?.resolve()
}

fn frequency(name: &'static str, direct: Option<f64>, squared: Option<f64>) -> Result<f64> {
    match (direct, squared) {
        (Some(_), Some(_)) => Err(Error::Config(format!(
            "give either {name} or {name}_squared, not both"
        ))),
        (Some(v), None) => Ok(v),
        (None, Some(s)) if s > 0.0 => Ok(s.sqrt()),
        (None, Some(s)) => Err(Error::InvalidParameter {
            name,
            reason: format!("squared value must be positive, got {s}"),
        }),
        (None, None) => Err(Error::Config(format!("missing {name} (or {name}_squared)"))),
    }
}

/// Snaps `x` to 12 decimals so a stepped grid prints as typed.
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn stepped_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "grid_step",
            reason: format!("must be positive, got {step}"),
        });
    }
    if !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidParameter {
            name: "grid_stop",
            reason: format!("need grid_start <= grid_stop, got {start} and {stop}"),
        });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| tidy(start + k as f64 * step)).collect())
}

impl ExperimentConfig {
    pub fn parse(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self) -> Result<Experiment> {
        let s = &self.system;
        let mu = frequency("mu", s.mu, s.mu_squared)?;
        let l1 = frequency("lambda1", s.lambda1, s.lambda1_squared)?;
        let l2 = frequency("lambda2", s.lambda2, s.lambda2_squared)?;

        let potential = match self.potential.kind {
            PotentialKind::Quadratic | PotentialKind::QuarticDegenerate
                if self.potential.gamma.is_some() || self.potential.beta.is_some() =>
            {
                return Err(Error::Config(
                    "gamma and beta apply only to kind = \"weighted-quadratic\"".into(),
                ));
            }
            PotentialKind::Quadratic => CouplingPotential::Quadratic,
            PotentialKind::QuarticDegenerate => CouplingPotential::QuarticDegenerate,
            PotentialKind::WeightedQuadratic => {
                let (Some(g), Some(b)) = (self.potential.gamma, self.potential.beta) else {
                    return Err(Error::Config(
                        "weighted-quadratic needs both gamma and beta".into(),
                    ));
                };
                CouplingPotential::weighted(g, b)?
            }
        };

        let a = &self.amplitudes;
        let stepped = (a.grid_start, a.grid_stop, a.grid_step);
        let grid = match (&a.grid, stepped) {
            (Some(_), (Some(_), _, _) | (_, Some(_), _) | (_, _, Some(_))) => {
                return Err(Error::Config(
                    "give either grid or grid_start/grid_stop/grid_step, not both".into(),
                ));
            }
            (Some(g), _) => g.clone(),
            (None, (Some(lo), Some(hi), Some(dx))) => stepped_grid(lo, hi, dx)?,
            (None, (None, None, None)) => Vec::new(),
            (None, _) => {
                return Err(Error::Config(
                    "grid_start, grid_stop and grid_step go together".into(),
                ));
            }
        };
        for &x in &grid {
            if !x.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "grid",
                    reason: format!("non-finite amplitude {x}"),
                });
            }
        }
        let x0_max = match a.x0_max {
            Some(m) => m,
            None => grid
                .iter()
                .chain(a.x0.iter())
                .fold(0.0f64, |m, x| m.max(x.abs())),
        };
        if !(x0_max.is_finite() && x0_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "x0_max",
                reason: format!("must be positive, got {x0_max}"),
            });
        }
        let system = ModeSystem::new(mu, l1, l2, s.epsilon, a.x0.unwrap_or(1.0))?;

        let i = &self.integration;
        if !(i.t_end.is_finite() && i.t_end > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("must be positive, got {}", i.t_end),
            });
        }
        let settings = IntegrationSettings {
            rtol: i.rtol,
            atol: i.atol,
            sample_step: i.sample_step,
            drift_bound: i.drift_bound,
            ..IntegrationSettings::default()
        };
        settings.sample_step_for(&system)?;
        for (name, v) in [
            ("rtol", i.rtol),
            ("atol", i.atol),
            ("drift_bound", i.drift_bound),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        let threshold = self.detector.threshold;
        if !(threshold.is_finite() && threshold > 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("must be a finite growth factor > 1, got {threshold}"),
            });
        }

        let q_line = x0_max * x0_max / (4.0 * mu * mu);
        let d = &self.diagram;
        let diagram = DiagramSpec {
            q_max: d.q_max.unwrap_or(q_line),
            a_min: d.a_min,
            a_max: d
                .a_max
                .unwrap_or_else(|| (l1.max(l2) / mu).powi(2) + 2.0 * q_line + 1.0),
            resolution: d.resolution,
        };
        diagram.validate()?;

        Ok(Experiment {
            name: self.name.clone().unwrap_or_else(|| "experiment".into()),
            system,
            potential,
            x0: a.x0,
            x0_max,
            grid,
            t_end: i.t_end,
            settings,
            threshold,
            diagram,
            output_dir: self.output.dir.clone(),
        })
    }
}
