//! Runs the perturbed set-point campaign and prints settling metrics.

use memsact::campaign::{nominal_scenario, perturbed_scenario, SET_POINTS};
use memsact::simulator::{envelope_report, run_closed_loop, settle_metrics};

fn main() -> memsact::Result<()> {
    for (label, build) in [
        ("nominal", nominal_scenario as fn(f64) -> memsact::Result<_>),
        ("perturbed", perturbed_scenario),
    ] {
        for &y_f in &SET_POINTS {
            let sc = build(y_f)?;
            let trace = run_closed_loop(&sc)?;
            let m = settle_metrics(&trace, &sc.trajectory)?;
            let env = envelope_report(&trace, &sc.controller);
            let last = trace.last().expect("non-empty trace");
            println!(
                "{label:9} y_f={y_f:.1} status={} x1={:.6} max|z1|={:.3e} final_error={:.3e} \
                 overshoot={:.3e} settle={:?} z1_excess={:.2e} mu2_max={:.3e} mu3_max={:.3e}",
                trace.status,
                last.state.x1,
                trace.max_abs_z1(),
                m.final_error,
                m.overshoot,
                m.settle_time,
                env.z1_excess,
                env.mu2_max,
                env.mu3_max,
            );
        }
    }
    Ok(())
}
