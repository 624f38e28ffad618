//! Ninth-order set-point transfer with zero velocity, acceleration and jerk at
//! both ends.

use crate::error::{invalid, Result};

/// Coefficients of `tau^5 .. tau^9` in the normalized transfer profile.
const PROFILE: [f64; 5] = [126.0, -420.0, 540.0, -315.0, 70.0];
const LOWEST_POWER: i32 = 5;

/// Reference value and its first three time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferencePoint {
    pub y: f64,
    pub dy: f64,
    pub ddy: f64,
    pub dddy: f64,
}

impl ReferencePoint {
    pub fn constant(y: f64) -> Self {
        Self {
            y,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub t_i: f64,
    pub t_f: f64,
    pub y_i: f64,
    pub y_f: f64,
}

impl TrajectoryConfig {
    /// Transfer duration used by the set-point campaign.
    pub const DEFAULT_DURATION: f64 = 10.0;

    pub fn new(t_i: f64, t_f: f64, y_i: f64, y_f: f64) -> Result<Self> {
        let cfg = Self { t_i, t_f, y_i, y_f };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Transfer from `y_i` to `y_f` over `[0, DEFAULT_DURATION]`.
    pub fn set_point(y_i: f64, y_f: f64) -> Result<Self> {
        Self::new(0.0, Self::DEFAULT_DURATION, y_i, y_f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_i.is_finite() && self.t_f.is_finite() && self.t_f > self.t_i) {
            return Err(invalid(
                "t_f",
                format!("need t_f > t_i, got [{}, {}]", self.t_i, self.t_f),
            ));
        }
        for (name, y) in [("y_i", self.y_i), ("y_f", self.y_f)] {
            if !(0.0..=1.0).contains(&y) {
                return Err(invalid(name, format!("must lie in [0, 1], got {y}")));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t_f - self.t_i
    }
}

/// Profile polynomial and its first three derivatives with respect to `tau`.
fn profile(tau: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (order, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &c) in PROFILE.iter().enumerate().rev() {
            let power = LOWEST_POWER + k as i32;
            let falling: f64 = (0..order as i32).map(|j| (power - j) as f64).product();
            let exp = power - order as i32;
            acc += c * falling * tau.powi(exp);
        }
        *slot = acc;
    }
    out
}

/// Reference at time `t`. Held at `y_i` before `t_i` and at `y_f` after `t_f`.
pub fn eval_reference(t: f64, cfg: &TrajectoryConfig) -> ReferencePoint {
    if t <= cfg.t_i {
        return ReferencePoint::constant(cfg.y_i);
    }
    if t >= cfg.t_f {
        return ReferencePoint::constant(cfg.y_f);
    }
    let span = cfg.duration();
    let tau = (t - cfg.t_i) / span;
    let amp = cfg.y_f - cfg.y_i;
    let [p, dp, ddp, dddp] = profile(tau);
    ReferencePoint {
        y: cfg.y_i + amp * p,
        dy: amp * dp / span,
        ddy: amp * ddp / (span * span),
        dddy: amp * dddp / (span * span * span),
    }
}
