//! Command-line front end for the memsact actuator simulator: configuration
//! files, the capacitance sweep, closed-loop set-point runs and static
//! pull-in.

pub mod commands;
pub mod config;
pub mod error;
