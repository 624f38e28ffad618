//! Robust backstepping tracking controller for the normalized actuator.
//!
//! The law is designed on the ideal plant (nominal damping `zeta0`, no
//! parasitics) and treats parasitics, damping error and resistance spread as
//! disturbance inputs. Nonlinear damping terms weighted by the `kappa` gains
//! bound the effect of each disturbance on the tracking errors.

use crate::error::{invalid, require_non_negative, require_ordered, require_positive, Result};
use crate::plant::{beta, NormalizedParams, SerialRatio, State};
use crate::trajectory::ReferencePoint;

/// Gains, nominal values and uncertainty bounds of the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub kappa2: f64,
    pub kappa31: f64,
    pub kappa32: f64,
    pub kappa33: f64,
    pub kappa34: f64,
    /// Nominal damping ratio.
    pub zeta0: f64,
    /// Nominal rate factor; defaults to the lower bound `beta_min`.
    pub beta0: Option<f64>,
    pub rho_p_max: f64,
    pub rho_s_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Floor on `sqrt(x3)` in the control law.
    pub eps_q: f64,
}

impl Default for ControllerConfig {
    /// Default gains with bounds collapsed onto the ideal plant.
    fn default() -> Self {
        Self {
            k1: 10.0,
            k2: 10.0,
            k3: 10.0,
            kappa2: 1.0,
            kappa31: 1.0,
            kappa32: 1.0,
            kappa33: 1.0,
            kappa34: 1.0,
            zeta0: 1.0,
            beta0: None,
            rho_p_max: 0.0,
            rho_s_max: 0.0,
            r_min: 1.0,
            r_max: 1.0,
            eps_q: 1e-6,
        }
    }
}

impl ControllerConfig {
    /// Default gains with the given uncertainty bounds.
    pub fn with_bounds(rho_p_max: f64, rho_s_max: f64, r_min: f64, r_max: f64) -> Self {
        Self {
            rho_p_max,
            rho_s_max,
            r_min,
            r_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("k1", self.k1)?;
        require_positive("k2", self.k2)?;
        require_positive("k3", self.k3)?;
        require_non_negative("kappa2", self.kappa2)?;
        require_non_negative("kappa31", self.kappa31)?;
        require_non_negative("kappa32", self.kappa32)?;
        require_non_negative("kappa33", self.kappa33)?;
        require_non_negative("kappa34", self.kappa34)?;
        require_positive("zeta0", self.zeta0)?;
        require_non_negative("rho_p_max", self.rho_p_max)?;
        require_non_negative("rho_s_max", self.rho_s_max)?;
        require_ordered("r_min", self.r_min, self.r_max)?;
        require_positive("eps_q", self.eps_q)?;
        let b0 = self.beta0();
        if !(b0 >= self.beta_min() && b0 <= self.beta_max()) {
            return Err(invalid(
                "beta0",
                format!("{b0} outside [{}, {}]", self.beta_min(), self.beta_max()),
            ));
        }
        Ok(())
    }

    /// Lower bound on the rate factor over all admissible parameters.
    pub fn beta_min(&self) -> f64 {
        1.0 / (self.r_max * (1.0 + self.rho_p_max * (1.0 + self.rho_s_max)))
    }

    pub fn beta_max(&self) -> f64 {
        1.0 / self.r_min
    }

    pub fn beta0(&self) -> f64 {
        self.beta0.unwrap_or_else(|| self.beta_min())
    }

    /// All feedback and damping gains multiplied by `factor`.
    pub fn scaled_gains(&self, factor: f64) -> Self {
        Self {
            k1: self.k1 * factor,
            k2: self.k2 * factor,
            k3: self.k3 * factor,
            kappa2: self.kappa2 * factor,
            kappa31: self.kappa31 * factor,
            kappa32: self.kappa32 * factor,
            kappa33: self.kappa33 * factor,
            kappa34: self.kappa34 * factor,
            ..*self
        }
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// First backstepping stage: velocity that makes `x1` converge to the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityTarget {
    pub z1: f64,
    pub x2d: f64,
    /// Exact time derivative of `x2d` along the plant.
    pub x2d_dot: f64,
}

pub fn desired_velocity(s: &State, r: &ReferencePoint, cfg: &ControllerConfig) -> VelocityTarget {
    let z1 = s.x1 - r.y;
    VelocityTarget {
        z1,
        x2d: r.dy - cfg.k1 * z1,
        x2d_dot: r.ddy - cfg.k1 * (s.x2 - r.dy),
    }
}

/// Second stage: squared charge that makes `x2` converge to `x2d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeTarget {
    pub z2: f64,
    pub x3d: f64,
}

pub fn desired_charge_squared(
    s: &State,
    v: &VelocityTarget,
    cfg: &ControllerConfig,
) -> ChargeTarget {
    let z2 = s.x2 - v.x2d;
    let x3d = 3.0
        * (2.0 * cfg.zeta0 * s.x2 + s.x1 + v.x2d_dot
            - cfg.kappa2 * cfg.zeta0 * s.x2.abs() * z2
            - cfg.k2 * z2);
    ChargeTarget { z2, x3d }
}

/// Control voltage with all intermediate signals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    pub u: f64,
    pub x2d: f64,
    pub x2d_dot: f64,
    pub x3d: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    /// Nominal acceleration `-2 zeta0 x2 - x1 + x3/3`.
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Final stage: source voltage driving `x3` onto `x3d`.
///
/// `b2` carries `k1 * ddy`, the term that makes `3 (a b1 + b2)` the exact
/// nominal derivative of `x3d`.
pub fn control_voltage(
    s: &State,
    r: &ReferencePoint,
    v: &VelocityTarget,
    c: &ChargeTarget,
    cfg: &ControllerConfig,
) -> ControlOutput {
    let State { x1, x2, x3 } = *s;
    let zeta0 = cfg.zeta0;
    let z3 = x3 - c.x3d;
    let a = -2.0 * zeta0 * x2 - x1 + x3 / 3.0;
    let b1 = 2.0 * zeta0 - cfg.k1 - cfg.k2 - cfg.kappa2 * zeta0 * (sgn(x2) * c.z2 + x2.abs());
    let b2 = r.dddy + cfg.k1 * r.ddy + (cfg.kappa2 * zeta0 * x2.abs() + cfg.k2) * v.x2d_dot + x2;
    let drift = a * b1 + b2;
    let feedback = 3.0 * drift
        - cfg.k3 * z3
        - cfg.kappa31 * zeta0 * (b1 * x2).abs() * z3
        - cfg.kappa32 * drift.abs() * z3
        - cfg.kappa33 * cfg.r_max * cfg.rho_p_max * x2.abs() * x3 * z3
        - cfg.kappa34 * cfg.rho_s_max * x3 * z3;
    let sq = x3.max(0.0).sqrt().max(cfg.eps_q);
    let u = 3.0 / (4.0 * sq) * (2.0 * x3 * (1.0 - x1) + feedback / cfg.beta_min());
    ControlOutput {
        u,
        x2d: v.x2d,
        x2d_dot: v.x2d_dot,
        x3d: c.x3d,
        z1: v.z1,
        z2: c.z2,
        z3,
        a,
        b1,
        b2,
    }
}

/// Runs the three stages.
pub fn control(s: &State, r: &ReferencePoint, cfg: &ControllerConfig) -> ControlOutput {
    let v = desired_velocity(s, r, cfg);
    let c = desired_charge_squared(s, &v, cfg);
    control_voltage(s, r, &v, &c, cfg)
}

/// Ultimate-bound functions of the `z2` and `z3` error dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MuDiagnostics {
    pub mu2: f64,
    pub mu31: f64,
    pub mu32: f64,
    pub mu33: f64,
    pub mu34: f64,
}

impl MuDiagnostics {
    pub fn mu3(&self) -> f64 {
        self.mu31 + self.mu32 + self.mu33 + self.mu34
    }
}

/// Evaluates the bound functions against the true plant parameters.
pub fn error_bound_diagnostics(
    s: &State,
    out: &ControlOutput,
    cfg: &ControllerConfig,
    truth: &NormalizedParams,
) -> MuDiagnostics {
    let State { x2, x3, .. } = *s;
    let zeta0 = cfg.zeta0;
    let d_zeta = truth.zeta - zeta0;
    let b = beta(s.x1, truth);
    let b_min = cfg.beta_min();
    let ratio = b / b_min;
    let d_beta = b - cfg.beta0();
    let rho_p = truth.rho_p;
    let rho_s = truth.rho_s.at(s.x1);
    let drift = (out.a * out.b1 + out.b2).abs();
    let base = cfg.k3 / 8.0;
    let coupling = 1.0 + rho_p * (1.0 + rho_s);

    MuDiagnostics {
        mu2: (2.0 * (d_zeta * x2).abs() + out.z3.abs() / 3.0)
            / (cfg.k2 / 2.0 + cfg.kappa2 * zeta0 * x2.abs()),
        mu31: 6.0 * (d_zeta * out.b1 * x2).abs()
            / (base + ratio * cfg.kappa31 * zeta0 * (out.b1 * x2).abs()),
        mu32: 3.0 * (d_beta.abs() / b_min) * drift / (base + ratio * cfg.kappa32 * drift),
        mu33: 2.0 * rho_p / coupling * x2.abs() * x3
            / (base + ratio * cfg.kappa33 * cfg.r_max * cfg.rho_p_max * x2.abs() * x3),
        mu34: 2.0 * rho_s / (truth.r * coupling) * x3
            / (base + ratio * cfg.rho_s_max * cfg.kappa34 * x3),
    }
}

/// State-independent upper bound on `mu3` for a true plant satisfying the
/// uncertainty bounds of `cfg`. Infinite when a damping gain or bound that a
/// nonzero disturbance needs is zero.
pub fn uniform_mu3_bound(cfg: &ControllerConfig, truth: &NormalizedParams) -> f64 {
    let d_zeta = (truth.zeta - cfg.zeta0).abs();
    let rho_s = match truth.rho_s {
        SerialRatio::Constant(v) => v,
        SerialRatio::Palmer(p) => p.bound().unwrap_or(f64::INFINITY),
    };
    let part = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let b0 = cfg.beta0();
    let rel_spread = (1.0 - b0 / cfg.beta_min())
        .abs()
        .max((1.0 - b0 / cfg.beta_max()).abs());
    part(6.0 * d_zeta, cfg.kappa31 * cfg.zeta0)
        + part(3.0 * rel_spread, cfg.kappa32)
        + part(2.0 * truth.rho_p, cfg.kappa33 * cfg.r_max * cfg.rho_p_max)
        + part(2.0 * rho_s, truth.r * cfg.rho_s_max * cfg.kappa34)
}

/// Upper bound on `mu2` given the largest `|z3|` seen.
pub fn mu2_bound(cfg: &ControllerConfig, truth: &NormalizedParams, z3_max: f64) -> f64 {
    let d_zeta = (truth.zeta - cfg.zeta0).abs();
    let damping = if d_zeta == 0.0 {
        0.0
    } else {
        2.0 * d_zeta / (cfg.kappa2 * cfg.zeta0)
    };
    damping + 2.0 * z3_max / (3.0 * cfg.k2)
}
