//! Set-point campaign presets and a batch runner.
//!
//! The perturbed plant has damping ratio 3 against a nominal 1, loop
//! resistance 2, parallel ratio 2 and serial ratio 0.226; the controller knows
//! only the bounds `r in [1, 2]`, `rho_p <= 2`, `rho_s <= 0.226`.

use std::num::NonZeroUsize;
use std::thread;

use crate::controller::ControllerConfig;
use crate::error::Result;
use crate::plant::{NormalizedParams, SerialRatio};
use crate::simulator::{run_closed_loop, Scenario, SimTrace};

/// Target deflections of the set-point campaign.
pub const SET_POINTS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Worst-case serial ratio used throughout the campaign.
pub const RHO_S_WORST: f64 = 0.226;

pub fn nominal_plant() -> NormalizedParams {
    NormalizedParams::nominal()
}

pub fn perturbed_plant() -> NormalizedParams {
    NormalizedParams::dimensionless(3.0, 2.0, 2.0, SerialRatio::Constant(RHO_S_WORST))
        .expect("valid preset")
}

/// Default gains with bounds collapsed onto the ideal plant.
pub fn nominal_controller() -> ControllerConfig {
    ControllerConfig::default()
}

/// Default gains with the campaign's uncertainty bounds.
pub fn robust_controller() -> ControllerConfig {
    ControllerConfig::with_bounds(2.0, RHO_S_WORST, 1.0, 2.0)
}

pub fn perturbed_scenario(y_f: f64) -> Result<Scenario> {
    Scenario::set_point(perturbed_plant(), robust_controller(), y_f)
}

pub fn nominal_scenario(y_f: f64) -> Result<Scenario> {
    Scenario::set_point(nominal_plant(), nominal_controller(), y_f)
}

/// Runs independent scenarios on up to `jobs` threads. Results keep the input
/// order.
pub fn run_batch(scenarios: &[Scenario], jobs: NonZeroUsize) -> Vec<Result<SimTrace>> {
    let jobs = jobs.get().min(scenarios.len().max(1));
    if jobs == 1 {
        return scenarios.iter().map(run_closed_loop).collect();
    }
    let chunk = scenarios.len().div_ceil(jobs);
    thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(run_closed_loop).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
