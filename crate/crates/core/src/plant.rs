//! Actuator dynamics in normalized coordinates.
//!
//! Deflection `x1 = 1 - G/G0`, velocity `x2`, and charge squared `x3 = q^2`
//! (charge normalized by the pull-in charge). Time is normalized by the
//! undamped natural frequency. The voltage source drives the device through a
//! loop resistance, a serial parasitic capacitor and a parallel parasitic
//! capacitor.

use crate::capmodel::{DeviceGeometry, PalmerSerialRatio};
use crate::error::{require_non_negative, require_positive, Error, Result};

/// Time derivative of a three-component state.
pub type Vec3 = [f64; 3];

/// Serial-parasitic ratio `rho_s = C0 / C_sp`, either fixed or a function of
/// deflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SerialRatio {
    Constant(f64),
    /// Quasi-static ratio from the Palmer decomposition of the device.
    Palmer(PalmerSerialRatio),
}

impl SerialRatio {
    pub fn at(&self, x1: f64) -> f64 {
        match self {
            SerialRatio::Constant(v) => *v,
            SerialRatio::Palmer(p) => p.at(x1),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SerialRatio::Constant(v) => require_non_negative("rho_s", *v),
            SerialRatio::Palmer(p) => p.geometry().validate(),
        }
    }
}

impl Default for SerialRatio {
    fn default() -> Self {
        SerialRatio::Constant(0.0)
    }
}

/// Serial parasitic capacitor of a physical device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SerialParasitic {
    /// No serial capacitor (infinite capacitance).
    None,
    /// Fixed capacitance in farads.
    Constant(f64),
    /// Gap-dependent capacitor from the Palmer decomposition.
    Palmer,
}

/// Physical actuator and drive-circuit parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass_kg: f64,
    pub damping_ns_per_m: f64,
    pub stiffness_n_per_m: f64,
    pub resistance_ohm: f64,
    pub geometry: DeviceGeometry,
    pub c_parallel_f: f64,
    pub c_serial: SerialParasitic,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("mass_kg", self.mass_kg)?;
        require_non_negative("damping_Ns_per_m", self.damping_ns_per_m)?;
        require_positive("stiffness_N_per_m", self.stiffness_n_per_m)?;
        require_positive("resistance_ohm", self.resistance_ohm)?;
        require_non_negative("parallel_F", self.c_parallel_f)?;
        if let SerialParasitic::Constant(c) = self.c_serial {
            require_positive("serial_F", c)?;
        }
        self.geometry.validate()
    }
}

/// Dimensionless plant parameters plus the scales that map back to SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedParams {
    pub zeta: f64,
    pub r: f64,
    pub rho_p: f64,
    pub rho_s: SerialRatio,
    /// Undamped natural frequency (rad/s).
    pub omega0: f64,
    /// Capacitance at the initial gap (F).
    pub c0: f64,
    /// Nominal pull-in voltage (V).
    pub v_pi: f64,
    /// Nominal pull-in charge (C).
    pub q_pi: f64,
}

impl NormalizedParams {
    /// Purely dimensionless parameter set with unit scales.
    pub fn dimensionless(zeta: f64, r: f64, rho_p: f64, rho_s: SerialRatio) -> Result<Self> {
        let p = Self {
            zeta,
            r,
            rho_p,
            rho_s,
            omega0: 1.0,
            c0: 1.0,
            v_pi: 1.0,
            q_pi: 1.5,
        };
        p.validate()?;
        Ok(p)
    }

    /// Ideal device: `zeta = 1`, `r = 1`, no parasitics.
    pub fn nominal() -> Self {
        Self::dimensionless(1.0, 1.0, 0.0, SerialRatio::Constant(0.0)).expect("valid")
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("zeta", self.zeta)?;
        require_positive("r", self.r)?;
        require_non_negative("rho_p", self.rho_p)?;
        self.rho_s.validate()?;
        require_positive("omega0", self.omega0)?;
        require_positive("c0", self.c0)?;
        require_positive("v_pi", self.v_pi)?;
        require_positive("q_pi", self.q_pi)
    }

    pub fn with_rho_p(mut self, rho_p: f64) -> Self {
        self.rho_p = rho_p;
        self
    }
}

/// Maps SI parameters onto the normalized model.
///
/// The pull-in charge is `Q_pi = (3/2) C0 V_pi`, the scaling under which the
/// electrostatic force reads `x3 / 3` and the static pull-in voltage is 1.
pub fn normalize(phys: &PhysicalParams) -> Result<NormalizedParams> {
    phys.validate()?;
    let omega0 = (phys.stiffness_n_per_m / phys.mass_kg).sqrt();
    let zeta = phys.damping_ns_per_m / (2.0 * phys.mass_kg * omega0);
    let g0 = phys.geometry.initial_gap_m;
    let c0 = phys.geometry.c0();
    let v_pi = (8.0 * phys.stiffness_n_per_m * g0 * g0 / (27.0 * c0)).sqrt();
    let q_pi = 1.5 * c0 * v_pi;
    let r = omega0 * c0 * phys.resistance_ohm;
    let rho_p = phys.c_parallel_f / c0;
    let rho_s = match phys.c_serial {
        SerialParasitic::None => SerialRatio::Constant(0.0),
        SerialParasitic::Constant(c) => SerialRatio::Constant(c0 / c),
        SerialParasitic::Palmer => SerialRatio::Palmer(PalmerSerialRatio::new(phys.geometry)?),
    };
    let p = NormalizedParams {
        zeta,
        r,
        rho_p,
        rho_s,
        omega0,
        c0,
        v_pi,
        q_pi,
    };
    p.validate()?;
    Ok(p)
}

/// Normalized state `(x1, x2, x3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl State {
    pub const ORIGIN: State = State {
        x1: 0.0,
        x2: 0.0,
        x3: 0.0,
    };

    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    /// Static equilibrium at deflection `x1`: at rest with `x3 = 3 x1`.
    pub fn at_rest(x1: f64) -> Self {
        Self::new(x1, 0.0, 3.0 * x1)
    }

    pub fn in_state_space(&self) -> bool {
        (0.0..=1.0).contains(&self.x1)
            && self.x3 >= 0.0
            && self.x2.is_finite()
            && self.x3.is_finite()
    }

    pub fn check(&self) -> Result<()> {
        if self.in_state_space() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "state ({}, {}, {}) outside x1 in [0, 1], x3 >= 0",
                self.x1, self.x2, self.x3
            )))
        }
    }

    pub fn to_array(self) -> Vec3 {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_array(a: Vec3) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Charge `q = +sqrt(x3)`.
    pub fn charge(&self) -> f64 {
        self.x3.max(0.0).sqrt()
    }
}

/// State with the charge itself in place of its square.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChargeState {
    pub x1: f64,
    pub x2: f64,
    pub q: f64,
}

impl ChargeState {
    pub fn new(x1: f64, x2: f64, q: f64) -> Self {
        Self { x1, x2, q }
    }

    pub fn to_array(self) -> Vec3 {
        [self.x1, self.x2, self.q]
    }

    pub fn from_array(a: Vec3) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_state(self) -> State {
        State::new(self.x1, self.x2, self.q * self.q)
    }
}

impl From<State> for ChargeState {
    fn from(s: State) -> Self {
        ChargeState::new(s.x1, s.x2, s.charge())
    }
}

/// Rate factor `1 / (r (1 + rho_p (1 - x1) + rho_p rho_s))` of the electrical
/// subsystem.
pub fn beta(x1: f64, p: &NormalizedParams) -> f64 {
    beta_with(x1, p.r, p.rho_p, p.rho_s.at(x1))
}

pub(crate) fn beta_with(x1: f64, r: f64, rho_p: f64, rho_s: f64) -> f64 {
    1.0 / (r * (1.0 + rho_p * (1.0 - x1) + rho_p * rho_s))
}

/// Right-hand side in `(x1, x2, x3)` coordinates.
pub fn rhs_x3_form(s: &State, u: f64, p: &NormalizedParams) -> Result<Vec3> {
    s.check()?;
    Ok(rhs_x3_unchecked(s.to_array(), u, p))
}

/// Same as [`rhs_x3_form`] without the state-space check, for integrator
/// stages. Negative `x3` is read as zero under the square root.
pub(crate) fn rhs_x3_unchecked(s: Vec3, u: f64, p: &NormalizedParams) -> Vec3 {
    let [x1, x2, x3] = s;
    let rho_s = p.rho_s.at(x1);
    let b = beta_with(x1, p.r, p.rho_p, rho_s);
    let sq = x3.max(0.0).sqrt();
    [
        x2,
        -2.0 * p.zeta * x2 - x1 + x3 / 3.0,
        b * (4.0 * sq / 3.0 * u - 2.0 * (1.0 - x1) * x3 - 2.0 * rho_s * x3
            + 2.0 * p.r * p.rho_p * x2 * x3),
    ]
}

/// Right-hand side in `(x1, x2, q)` coordinates.
pub fn rhs_charge_form(s: &ChargeState, u: f64, p: &NormalizedParams) -> Result<Vec3> {
    if !(0.0..=1.0).contains(&s.x1) {
        return Err(Error::Domain(format!("x1 = {} outside [0, 1]", s.x1)));
    }
    Ok(rhs_charge_unchecked(s.to_array(), u, p))
}

pub(crate) fn rhs_charge_unchecked(s: Vec3, u: f64, p: &NormalizedParams) -> Vec3 {
    let [x1, x2, q] = s;
    let rho_s = p.rho_s.at(x1);
    let b = beta_with(x1, p.r, p.rho_p, rho_s);
    [
        x2,
        -2.0 * p.zeta * x2 - x1 + q * q / 3.0,
        b * (2.0 / 3.0 * u - (1.0 - x1) * q - rho_s * q + p.r * p.rho_p * x2 * q),
    ]
}

/// Source voltage holding the device at rest at deflection `x1`.
pub fn equilibrium_voltage(x1: f64, rho_s: f64) -> f64 {
    1.5 * (3.0 * x1).sqrt() * (1.0 + rho_s - x1)
}

/// Static pull-in point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullIn {
    pub x_pi: f64,
    pub u_pi: f64,
}

/// Maximum of the static voltage curve [`equilibrium_voltage`] over the travel.
pub fn static_pullin(rho_s: f64) -> Result<PullIn> {
    require_non_negative("rho_s", rho_s)?;
    let x_pi = ((1.0 + rho_s) / 3.0).min(1.0);
    Ok(PullIn {
        x_pi,
        u_pi: equilibrium_voltage(x_pi, rho_s),
    })
}

/// Electrical quantities derived from the state and source voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveDiagnostics {
    /// Source voltage.
    pub u: f64,
    /// Charge `sqrt(x3)`.
    pub q: f64,
    /// Source current from Ohm's law on the loop resistance.
    pub i: f64,
    /// Actuator-voltage proxy `(1 - x1) q`.
    pub voltage_proxy: f64,
    /// Actuator voltage over the pull-in voltage, `(3/2)(1 - x1) q`.
    pub v_a: f64,
    pub beta: f64,
}

pub fn drive_diagnostics(s: &State, u: f64, p: &NormalizedParams) -> Result<DriveDiagnostics> {
    s.check()?;
    let q = s.charge();
    let rho_s = p.rho_s.at(s.x1);
    let voltage_proxy = (1.0 - s.x1) * q;
    // voltage across device plus serial capacitor, over V_pi
    let v_o = 1.5 * q * (1.0 - s.x1 + rho_s);
    Ok(DriveDiagnostics {
        u,
        q,
        i: (u - v_o) / p.r,
        voltage_proxy,
        v_a: 1.5 * voltage_proxy,
        beta: beta(s.x1, p),
    })
}
