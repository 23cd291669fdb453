//! Experiment configuration and the file outputs of the command-line tool.

pub mod commands;
pub mod config;
mod svg;

pub use commands::{
    diagram, diagram_crossings, intervals, report, simulate, sweep, Crossing, Outcome,
};
pub use config::{preset, preset_source, DiagramSpec, Experiment, ExperimentConfig, PRESET_NAMES};
