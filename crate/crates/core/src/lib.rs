//! Which residual mode of a coupled Hamiltonian oscillator captures the energy
//! of the dominating mode.
//!
//! The crate linearizes the residual modes about the dominating oscillation,
//! which yields Mathieu equations whose parameters move along straight lines
//! as the energy grows. [`mathieu`] classifies points of the Mathieu diagram,
//! [`resonance`] intersects the lines with the characteristic curves to obtain
//! activating energy intervals, [`dynamics`] integrates the full nonlinear
//! system and [`detector`] checks which mode actually grew. [`harness`] reads
//! experiment files and writes the tables and plots of the command-line tool.

pub mod detector;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod mathieu;
pub mod ode;
pub mod resonance;

pub use error::{Error, Result};
