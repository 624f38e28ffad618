use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryConfig;

use super::trace::{SimTrace, Status};

/// `|z1|` band defining the settled hold phase.
pub const SETTLE_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleMetrics {
    /// Mean `|z1|` over the last 10% of the hold phase.
    pub final_error: f64,
    /// Excursion past the target in the direction of travel, zero if none.
    pub overshoot: f64,
    /// First hold-phase time after which `|z1|` stays inside [`SETTLE_BAND`];
    /// `None` if the run ends outside the band.
    pub settle_time: Option<f64>,
}

pub fn settle_metrics(trace: &SimTrace, cfg: &TrajectoryConfig) -> Result<SettleMetrics> {
    if trace.status == Status::NumericalFailure {
        return Err(Error::TraceTooShort(
            "run ended in numerical failure".into(),
        ));
    }
    let hold: Vec<_> = trace.records.iter().filter(|r| r.t >= cfg.t_f).collect();
    if hold.len() < 2 {
        return Err(Error::TraceTooShort(format!(
            "{} samples after t_f = {}",
            hold.len(),
            cfg.t_f
        )));
    }
    let t_last = hold[hold.len() - 1].t;
    let tail_start = cfg.t_f + 0.9 * (t_last - cfg.t_f);
    let tail: Vec<f64> = hold
        .iter()
        .filter(|r| r.t >= tail_start)
        .map(|r| r.z1.abs())
        .collect();
    let final_error = tail.iter().sum::<f64>() / tail.len() as f64;

    let overshoot = if cfg.y_f >= cfg.y_i {
        let peak = trace
            .records
            .iter()
            .map(|r| r.state.x1)
            .fold(f64::MIN, f64::max);
        (peak - cfg.y_f).max(0.0)
    } else {
        let trough = trace
            .records
            .iter()
            .map(|r| r.state.x1)
            .fold(f64::MAX, f64::min);
        (cfg.y_f - trough).max(0.0)
    };

    let settle_time = match hold.iter().rposition(|r| r.z1.abs() >= SETTLE_BAND) {
        None => Some(hold[0].t),
        Some(i) if i + 1 < hold.len() => Some(hold[i + 1].t),
        Some(_) => None,
    };

    Ok(SettleMetrics {
        final_error,
        overshoot,
        settle_time,
    })
}

/// Largest excess of the tracking errors over their decay envelopes; a value
/// `<= 0` means the envelope holds on every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    /// `|z1(t)| - (|z1(0)| e^{-k1 t} + sup|z2| / k1)`.
    pub z1_excess: f64,
    /// `|z2(t)| - (|z2(0)| e^{-k2 t/2} + sup mu2)`.
    pub z2_excess_half_rate: f64,
    /// Same with the full rate `e^{-k2 t}`.
    pub z2_excess_full_rate: f64,
    /// `|z3(t)| - (|z3(0)| e^{-k3 t/2} + sup mu3)`.
    pub z3_excess_half_rate: f64,
    pub z3_excess_full_rate: f64,
    pub mu2_max: f64,
    pub mu3_max: f64,
    /// Every sampled `mu2` and `mu3` is finite.
    pub mu_finite: bool,
}

/// Evaluates the decay envelopes on a trace with running suprema of the
/// forcing terms.
pub fn envelope_report(trace: &SimTrace, cfg: &ControllerConfig) -> EnvelopeReport {
    let mut report = EnvelopeReport {
        z1_excess: f64::NEG_INFINITY,
        z2_excess_half_rate: f64::NEG_INFINITY,
        z2_excess_full_rate: f64::NEG_INFINITY,
        z3_excess_half_rate: f64::NEG_INFINITY,
        z3_excess_full_rate: f64::NEG_INFINITY,
        mu2_max: 0.0,
        mu3_max: 0.0,
        mu_finite: true,
    };
    let Some(first) = trace.records.first() else {
        return report;
    };
    let (t0, z10, z20, z30) = (first.t, first.z1.abs(), first.z2.abs(), first.z3.abs());
    let mut z2_sup: f64 = 0.0;
    for r in &trace.records {
        let t = r.t - t0;
        z2_sup = z2_sup.max(r.z2.abs());
        report.mu_finite &= r.mu2.is_finite() && r.mu3.is_finite();
        report.mu2_max = report.mu2_max.max(r.mu2);
        report.mu3_max = report.mu3_max.max(r.mu3);

        let z1_bound = z10 * (-cfg.k1 * t).exp() + z2_sup / cfg.k1;
        report.z1_excess = report.z1_excess.max(r.z1.abs() - z1_bound);
        let z2 = r.z2.abs();
        report.z2_excess_half_rate = report
            .z2_excess_half_rate
            .max(z2 - (z20 * (-0.5 * cfg.k2 * t).exp() + report.mu2_max));
        report.z2_excess_full_rate = report
            .z2_excess_full_rate
            .max(z2 - (z20 * (-cfg.k2 * t).exp() + report.mu2_max));
        let z3 = r.z3.abs();
        report.z3_excess_half_rate = report
            .z3_excess_half_rate
            .max(z3 - (z30 * (-0.5 * cfg.k3 * t).exp() + report.mu3_max));
        report.z3_excess_full_rate = report
            .z3_excess_full_rate
            .max(z3 - (z30 * (-cfg.k3 * t).exp() + report.mu3_max));
    }
    report
}
