//! Fixed-step time integration of the actuator, open loop or under the
//! tracking controller.

mod metrics;
mod trace;

pub use metrics::{envelope_report, settle_metrics, EnvelopeReport, SettleMetrics, SETTLE_BAND};
pub use trace::{fmt_sig9, SimTrace, Status, TraceRecord, CSV_HEADER};

use crate::controller::{control, error_bound_diagnostics, ControllerConfig};
use crate::error::{invalid, require_positive, Error, Result};
use crate::plant::{
    beta, rhs_charge_unchecked, rhs_x3_unchecked, ChargeState, NormalizedParams, State, Vec3,
};
use crate::trajectory::{eval_reference, TrajectoryConfig};

/// Default integration step in normalized time.
pub const DEFAULT_DT: f64 = 1e-3;

/// Squared charge placed on an otherwise uncharged start.
///
/// The `x3` equations admit the trivial solution `x3 = 0` for any input, so a
/// start from exactly zero charge never moves; a seed selects the physical
/// branch on which the charge grows.
pub const X3_SEED: f64 = 1e-10;

/// Coordinates the plant is integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlantForm {
    /// `(x1, x2, x3)` with `x3 = q^2`.
    #[default]
    ChargeSquared,
    /// `(x1, x2, q)`, seeded with `q = +sqrt(x3)`.
    Charge,
}

/// How the control input is held across an integration step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlHold {
    /// Control law evaluated at every Runge-Kutta stage.
    #[default]
    Stagewise,
    /// Control computed at the start of the step and held.
    ZeroOrder,
}

/// One closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    /// True plant parameters.
    pub plant: NormalizedParams,
    pub controller: ControllerConfig,
    pub trajectory: TrajectoryConfig,
    pub t_end: f64,
    pub dt: f64,
    pub initial: State,
    /// Record every n-th step (the final step is always recorded).
    pub sample_every: usize,
    pub form: PlantForm,
    pub hold: ControlHold,
}

impl Scenario {
    /// Hold time after the transfer in set-point runs.
    pub const HOLD_DURATION: f64 = 10.0;

    /// Transfer from rest at the origin to `y_f`, then hold.
    pub fn set_point(
        plant: NormalizedParams,
        controller: ControllerConfig,
        y_f: f64,
    ) -> Result<Self> {
        let trajectory = TrajectoryConfig::set_point(0.0, y_f)?;
        let sc = Self {
            plant,
            controller,
            trajectory,
            t_end: trajectory.t_f + Self::HOLD_DURATION,
            dt: DEFAULT_DT,
            initial: State::new(0.0, 0.0, X3_SEED),
            sample_every: 1,
            form: PlantForm::default(),
            hold: ControlHold::default(),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.controller.validate()?;
        self.trajectory.validate()?;
        require_positive("dt", self.dt)?;
        require_positive("t_end", self.t_end)?;
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be >= 1"));
        }
        self.initial.check()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    /// Contact is the goal when the target is full closure.
    fn contact_allowed(&self) -> bool {
        self.trajectory.y_f >= 1.0
    }
}

fn rk4<F>(f: F, t: f64, y: Vec3, dt: f64) -> Vec3
where
    F: Fn(f64, Vec3) -> Vec3,
{
    let add = |y: Vec3, k: Vec3, h: f64| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, add(y, k1, 0.5 * dt));
    let k3 = f(t + 0.5 * dt, add(y, k2, 0.5 * dt));
    let k4 = f(t + dt, add(y, k3, dt));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Result of one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<S> {
    pub state: S,
    /// The plate reached the fixed electrode during the step.
    pub contact: bool,
}

/// Projects mechanical coordinates back onto `x1 in [0, 1]`. At either stop the
/// outward velocity is removed.
fn clamp_travel(y: &mut Vec3) -> bool {
    if y[0] >= 1.0 {
        y[0] = 1.0;
        y[1] = y[1].min(0.0);
        true
    } else {
        if y[0] < 0.0 {
            y[0] = 0.0;
            y[1] = y[1].max(0.0);
        }
        false
    }
}

fn check_finite(y: &Vec3, t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure { t })
    }
}

/// Classical Runge-Kutta step of the `(x1, x2, x3)` equations with `u` held
/// over the step.
pub fn step_rk4(s: &State, u: f64, p: &NormalizedParams, dt: f64) -> Result<StepOutcome<State>> {
    s.check()?;
    require_positive("dt", dt)?;
    if !u.is_finite() {
        return Err(Error::NumericalFailure { t: 0.0 });
    }
    let mut y = rk4(|_, y| rhs_x3_unchecked(y, u, p), 0.0, s.to_array(), dt);
    check_finite(&y, dt)?;
    y[2] = y[2].max(0.0);
    let contact = clamp_travel(&mut y);
    Ok(StepOutcome {
        state: State::from_array(y),
        contact,
    })
}

/// Runge-Kutta step of the `(x1, x2, q)` equations with `u` held over the step.
pub fn step_rk4_charge(
    s: &ChargeState,
    u: f64,
    p: &NormalizedParams,
    dt: f64,
) -> Result<StepOutcome<ChargeState>> {
    require_positive("dt", dt)?;
    if !(0.0..=1.0).contains(&s.x1) || !u.is_finite() {
        return Err(Error::Domain(format!(
            "x1 = {} outside [0, 1] or u = {u}",
            s.x1
        )));
    }
    let mut y = rk4(|_, y| rhs_charge_unchecked(y, u, p), 0.0, s.to_array(), dt);
    check_finite(&y, dt)?;
    let contact = clamp_travel(&mut y);
    Ok(StepOutcome {
        state: ChargeState::from_array(y),
        contact,
    })
}

/// Integrated coordinates mapped to the controller's view.
fn observe(y: Vec3, form: PlantForm) -> State {
    match form {
        PlantForm::ChargeSquared => State::from_array(y),
        PlantForm::Charge => ChargeState::from_array(y).to_state(),
    }
}

fn plant_rhs(y: Vec3, u: f64, p: &NormalizedParams, form: PlantForm) -> Vec3 {
    match form {
        PlantForm::ChargeSquared => rhs_x3_unchecked(y, u, p),
        PlantForm::Charge => rhs_charge_unchecked(y, u, p),
    }
}

/// Simulates the closed loop against the true plant of the scenario.
///
/// Contact ends the run with [`Status::Contact`] unless the target is full
/// closure, in which case the plate is held at the stop for the rest of the run.
pub fn run_closed_loop(sc: &Scenario) -> Result<SimTrace> {
    sc.validate()?;
    let cfg = &sc.controller;
    let p = &sc.plant;
    let traj = &sc.trajectory;
    let steps = sc.steps();

    let mut y = match sc.form {
        PlantForm::ChargeSquared => sc.initial.to_array(),
        PlantForm::Charge => ChargeState::from(sc.initial).to_array(),
    };
    let mut trace = SimTrace::with_capacity(steps / sc.sample_every + 2);
    let mut in_contact = false;

    for n in 0..=steps {
        let t = n as f64 * sc.dt;
        let s = observe(y, sc.form);
        let reference = eval_reference(t, traj);
        let out = control(&s, &reference, cfg);
        if !out.u.is_finite() {
            trace.finish(Status::NumericalFailure);
            return Ok(trace);
        }
        let mu = error_bound_diagnostics(&s, &out, cfg, p);
        let last = n == steps;
        if n % sc.sample_every == 0 || last {
            trace.push(TraceRecord {
                t,
                state: s,
                u: out.u,
                z1: out.z1,
                z2: out.z2,
                z3: out.z3,
                mu2: mu.mu2,
                mu3: mu.mu3(),
                beta: beta(s.x1, p),
            });
        }
        if last {
            break;
        }

        let held_u = out.u;
        let next = match sc.hold {
            ControlHold::Stagewise => rk4(
                |tau, y| {
                    let u = control(&observe(y, sc.form), &eval_reference(tau, traj), cfg).u;
                    plant_rhs(y, u, p, sc.form)
                },
                t,
                y,
                sc.dt,
            ),
            ControlHold::ZeroOrder => rk4(|_, y| plant_rhs(y, held_u, p, sc.form), t, y, sc.dt),
        };
        if check_finite(&next, t + sc.dt).is_err() {
            trace.finish(Status::NumericalFailure);
            return Ok(trace);
        }
        y = next;
        if sc.form == PlantForm::ChargeSquared {
            y[2] = y[2].max(0.0);
        }
        if clamp_travel(&mut y) || in_contact {
            in_contact = true;
            y[0] = 1.0;
            y[1] = 0.0;
            if !sc.contact_allowed() {
                let t_next = (n + 1) as f64 * sc.dt;
                let s = observe(y, sc.form);
                let out = control(&s, &eval_reference(t_next, traj), cfg);
                let mu = error_bound_diagnostics(&s, &out, cfg, p);
                trace.push(TraceRecord {
                    t: t_next,
                    state: s,
                    u: out.u,
                    z1: out.z1,
                    z2: out.z2,
                    z3: out.z3,
                    mu2: mu.mu2,
                    mu3: mu.mu3(),
                    beta: beta(s.x1, p),
                });
                trace.finish(Status::Contact);
                return Ok(trace);
            }
        }
    }
    trace.finish(if in_contact {
        Status::Contact
    } else {
        Status::Completed
    });
    Ok(trace)
}

/// Simulates the plant under a constant source voltage `u0`. Tracking errors
/// and bound functions are recorded as zero.
///
/// Integration runs in charge coordinates, so a start from zero charge
/// charges up normally.
pub fn run_open_loop(
    u0: f64,
    plant: &NormalizedParams,
    initial: State,
    t_end: f64,
    dt: f64,
) -> Result<SimTrace> {
    plant.validate()?;
    initial.check()?;
    require_positive("dt", dt)?;
    require_positive("t_end", t_end)?;
    if !u0.is_finite() {
        return Err(invalid("u0", format!("must be finite, got {u0}")));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut trace = SimTrace::with_capacity(steps + 1);
    let mut s = ChargeState::from(initial);
    let record = |t: f64, s: ChargeState| {
        let state = s.to_state();
        TraceRecord {
            t,
            state,
            u: u0,
            beta: beta(state.x1, plant),
            ..Default::default()
        }
    };
    for n in 0..=steps {
        trace.push(record(n as f64 * dt, s));
        if n == steps {
            break;
        }
        match step_rk4_charge(&s, u0, plant, dt) {
            Ok(step) => {
                s = step.state;
                if step.contact {
                    trace.push(record((n + 1) as f64 * dt, s));
                    trace.finish(Status::Contact);
                    return Ok(trace);
                }
            }
            Err(Error::NumericalFailure { .. }) => {
                trace.finish(Status::NumericalFailure);
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
    }
    trace.finish(Status::Completed);
    Ok(trace)
}
