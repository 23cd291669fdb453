use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use energy_capture::harness::{self, Experiment, ExperimentConfig, Outcome};
use energy_capture::{Error, Result};

#[derive(Parser)]
#[command(
    name = "energy-capture",
    version,
    about = "Stability diagrams, activating intervals and capture sweeps for coupled oscillators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Experiment1,
    Experiment2,
    Experiment3,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Experiment1 => "experiment1",
            Preset::Experiment2 => "experiment2",
            Preset::Experiment3 => "experiment3",
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Output directory; defaults to the config's, then to the current one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunFlags {
    /// Integration horizon.
    #[arg(long)]
    t_end: Option<f64>,
    /// Growth factor a residual mode must reach.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Stability diagram with the mode lines and their crossings.
    Diagram {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q_max: Option<f64>,
        #[arg(long)]
        a_min: Option<f64>,
        #[arg(long)]
        a_max: Option<f64>,
        /// Cells per axis of the stability grid.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Activating intervals and predicted capture bands.
    Intervals {
        #[command(flatten)]
        common: Common,
        /// Upper end of the amplitude search.
        #[arg(long)]
        x0_max: Option<f64>,
    },
    /// Integrates one amplitude.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x0: Option<f64>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Integrates every grid amplitude and compares with the prediction.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Intervals, sweep and a markdown summary.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunFlags,
    },
}

fn load(common: &Common) -> Result<(Experiment, PathBuf)> {
    let exp = match (&common.config, common.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?.resolve()?,
        (None, Some(p)) => harness::preset(p.name())?,
        (None, None) => {
            return Err(Error::Config("give --config FILE or --preset NAME".into()));
        }
    };
    let out = common
        .out
        .clone()
        .or_else(|| exp.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((exp, out))
}

fn apply_run(exp: &mut Experiment, run: &RunFlags) -> Result<()> {
    if let Some(t) = run.t_end {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("must be positive, got {t}"),
            });
        }
        exp.t_end = t;
    }
    if let Some(g) = run.threshold {
        if !(g.is_finite() && g > 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("must be a finite growth factor > 1, got {g}"),
            });
        }
        exp.threshold = g;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Diagram {
            common,
            q_max,
            a_min,
            a_max,
            resolution,
        } => {
            let (mut exp, out) = load(&common)?;
            let d = &mut exp.diagram;
            d.q_max = q_max.unwrap_or(d.q_max);
            d.a_min = a_min.unwrap_or(d.a_min);
            d.a_max = a_max.unwrap_or(d.a_max);
            d.resolution = resolution.unwrap_or(d.resolution);
            harness::diagram(&exp, &out)
        }
        Command::Intervals { common, x0_max } => {
            let (mut exp, out) = load(&common)?;
            if let Some(m) = x0_max {
                if !(m.is_finite() && m > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "x0_max",
                        reason: format!("must be positive, got {m}"),
                    });
                }
                exp.x0_max = m;
            }
            harness::intervals(&exp, &out)
        }
        Command::Simulate { common, x0, run } => {
            let (mut exp, out) = load(&common)?;
            apply_run(&mut exp, &run)?;
            let x0 = x0.or(exp.x0).ok_or_else(|| {
                Error::Config("simulate needs --x0 or amplitudes.x0 in the config".into())
            })?;
            exp.system = exp.system.with_x0(x0)?;
            harness::simulate(&exp, &out).map(|(o, _)| o)
        }
        Command::Sweep { common, run } => {
            let (mut exp, out) = load(&common)?;
            apply_run(&mut exp, &run)?;
            harness::sweep(&exp, &out).map(|(o, _)| o)
        }
        Command::Report { common, run } => {
            let (mut exp, out) = load(&common)?;
            apply_run(&mut exp, &run)?;
            harness::report(&exp, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("energy-capture: {e}");
            ExitCode::FAILURE
        }
    }
}
