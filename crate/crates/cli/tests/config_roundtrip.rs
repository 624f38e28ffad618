use std::fs;
use std::path::Path;

use memsact_cli::config::RunConfig;

const FULL: &str = r#"
[geometry]
width_m = 4.5e-4
length_m = 2.25e-4
initial_gap_m = 3.0e-5
permittivity_F_per_m = 8.9e-12

[physical]
mass_kg = 2.1e-9
damping_Ns_per_m = 1.3e-5
stiffness_N_per_m = 2.5
resistance_ohm = 4.0e7

[parasitics]
rho_p = 0.7
rho_s = 0.1
serial_model = "palmer"
reference_capacitance_F = 3.3e-14
serial_min_F = 1.9e-13

[controller]
k1 = 12.5
k2 = 9.0
k3 = 11.0
kappa2 = 0.5
kappa31 = 0.25
kappa32 = 2.0
kappa33 = 1.5
kappa34 = 0.75
zeta0 = 1.1
beta0 = 0.4
rho_p_bar = 1.0
rho_s_bar = 0.2
r_min = 0.5
r_max = 3.0
eps_q = 1e-7

[trajectory]
t_i = 1.0
t_f = 8.0
y_i = 0.1
y_f = 0.7

[simulation]
t_end = 15.0
dt = 5e-4
sample_every = 4
form = "charge"
hold = "zero-order"
initial_x1 = 0.1
initial_x2 = 0.0
initial_x3 = 0.3
"#;

fn round_trip(text: &str) {
    let cfg = RunConfig::parse(text, &[]).unwrap();
    let again = RunConfig::parse(&cfg.to_toml(), &[]).unwrap();
    assert_eq!(cfg, again);
    let plant = cfg.plant(text).unwrap();
    let plant_again = again.plant(&again.to_toml()).unwrap();
    assert_eq!(plant, plant_again);
}

#[test]
fn fully_populated_config_round_trips() {
    round_trip(FULL);
    let cfg = RunConfig::parse(FULL, &[]).unwrap();
    cfg.validate(FULL).unwrap();
}

#[test]
fn sample_configs_round_trip_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        round_trip(&text);
        RunConfig::parse(&text, &[])
            .unwrap()
            .validate(&text)
            .unwrap();
        n += 1;
    }
    assert!(n >= 3);
}

#[test]
fn overrides_match_editing_the_file() {
    let base = "[controller]\nk1 = 10.0\n";
    let edited = "[controller]\nk1 = 20.0\n\n[trajectory]\ny_f = 0.3\n";
    let a = RunConfig::parse(
        base,
        &[
            "controller.k1=20.0".to_string(),
            "trajectory.y_f=0.3".to_string(),
        ],
    )
    .unwrap();
    let b = RunConfig::parse(edited, &[]).unwrap();
    assert_eq!(a, b);
}
