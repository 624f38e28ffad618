//! Simulation of a parallel-plate electrostatic micro-actuator with fringing
//! and parasitic capacitances, under a robust backstepping set-point
//! controller.
//!
//! - [`capmodel`]: ideal and Palmer capacitance, substitute/serial decomposition.
//! - [`plant`]: normalized dynamics, parameter normalization, static pull-in.
//! - [`controller`]: tracking law and its error-bound functions.
//! - [`trajectory`]: smooth set-point transfers.
//! - [`simulator`]: fixed-step integration, traces and settling metrics.
//! - [`campaign`]: set-point campaign presets and a batch runner.

pub mod campaign;
pub mod capmodel;
pub mod controller;
mod error;
pub mod plant;
pub mod simulator;
pub mod trajectory;

pub use error::{Error, Result};
