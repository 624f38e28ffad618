use std::num::NonZeroUsize;

use memsact::campaign::{perturbed_scenario, run_batch, SET_POINTS};
use memsact::plant::{equilibrium_voltage, NormalizedParams, State};
use memsact::simulator::{
    run_closed_loop, run_open_loop, settle_metrics, ControlHold, PlantForm, Status,
};

/// Root of the static voltage curve below the pull-in point, by bisection.
fn static_deflection(u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0 / 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if equilibrium_voltage(mid, 0.0) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn open_loop_settles_on_static_curve() {
    let p = NormalizedParams::nominal();
    let trace = run_open_loop(0.5, &p, State::ORIGIN, 60.0, 1e-2).unwrap();
    assert_eq!(trace.status, Status::Completed);
    let last = trace.last().unwrap().state;
    let x = static_deflection(0.5);
    assert!((last.x1 - x).abs() < 1e-6, "{} vs {x}", last.x1);
    assert!((last.x3 - 3.0 * x).abs() < 1e-5);
}

#[test]
fn open_loop_beyond_pullin_snaps_down() {
    let p = NormalizedParams::nominal();
    let trace = run_open_loop(1.05, &p, State::ORIGIN, 60.0, 1e-2).unwrap();
    assert_eq!(trace.status, Status::Contact);
    assert_eq!(trace.last().unwrap().state.x1, 1.0);
}

#[test]
fn plant_forms_agree() {
    let a = perturbed_scenario(0.6).unwrap();
    let mut b = a;
    b.form = PlantForm::Charge;
    let (ta, tb) = (run_closed_loop(&a).unwrap(), run_closed_loop(&b).unwrap());
    assert_eq!(ta.records.len(), tb.records.len());
    for (ra, rb) in ta.records.iter().zip(&tb.records).skip(100) {
        assert!((ra.state.x1 - rb.state.x1).abs() < 1e-6, "t = {}", ra.t);
    }
}

#[test]
fn runs_are_deterministic() {
    let sc = perturbed_scenario(0.8).unwrap();
    let (a, b) = (run_closed_loop(&sc).unwrap(), run_closed_loop(&sc).unwrap());
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn batch_matches_sequential_runs() {
    let scenarios: Vec<_> = SET_POINTS
        .iter()
        .map(|&y| perturbed_scenario(y).unwrap())
        .collect();
    let batch = run_batch(&scenarios, NonZeroUsize::new(3).unwrap());
    for (sc, res) in scenarios.iter().zip(batch) {
        assert_eq!(res.unwrap(), run_closed_loop(sc).unwrap());
    }
}

#[test]
fn doubling_gains_does_not_worsen_final_error() {
    for y_f in [0.4, 0.8] {
        let base = perturbed_scenario(y_f).unwrap();
        let mut stiff = base;
        stiff.controller = base.controller.scaled_gains(2.0);
        let e_base = settle_metrics(&run_closed_loop(&base).unwrap(), &base.trajectory)
            .unwrap()
            .final_error;
        let e_stiff = settle_metrics(&run_closed_loop(&stiff).unwrap(), &stiff.trajectory)
            .unwrap()
            .final_error;
        assert!(e_stiff <= e_base, "y_f = {y_f}: {e_stiff} > {e_base}");
    }
}

#[test]
fn first_error_obeys_its_dynamics() {
    // z1' = -k1 z1 + z2 along any closed-loop solution
    let sc = perturbed_scenario(0.6).unwrap();
    let trace = run_closed_loop(&sc).unwrap();
    let k1 = sc.controller.k1;
    for w in trace.records.windows(3).skip(10).step_by(97) {
        let dz1 = (w[2].z1 - w[0].z1) / (w[2].t - w[0].t);
        let expected = -k1 * w[1].z1 + w[1].z2;
        assert!(
            (dz1 - expected).abs() < 1e-5,
            "t = {}: {dz1} vs {expected}",
            w[1].t
        );
    }
}

#[test]
fn zero_order_hold_still_tracks() {
    let mut sc = perturbed_scenario(0.6).unwrap();
    sc.hold = ControlHold::ZeroOrder;
    let trace = run_closed_loop(&sc).unwrap();
    assert_eq!(trace.status, Status::Completed);
    let m = settle_metrics(&trace, &sc.trajectory).unwrap();
    assert!(m.final_error < 0.02);
}

#[test]
fn contact_ends_sub_unity_run() {
    let mut sc = perturbed_scenario(0.5).unwrap();
    sc.initial = State::new(0.999, 20.0, 3.0);
    let trace = run_closed_loop(&sc).unwrap();
    assert_eq!(trace.status, Status::Contact);
    let last = trace.last().unwrap();
    assert_eq!((last.state.x1, last.state.x2), (1.0, 0.0));
    assert!(last.t < 0.01);
}

#[test]
fn full_closure_holds_at_the_stop() {
    let mut sc = perturbed_scenario(1.0).unwrap();
    sc.initial = State::new(0.999, 20.0, 3.0);
    let trace = run_closed_loop(&sc).unwrap();
    assert_eq!(trace.status, Status::Contact);
    let last = trace.last().unwrap();
    assert_eq!(last.state.x1, 1.0);
    assert!((last.t - sc.t_end).abs() < 1e-9);
}
