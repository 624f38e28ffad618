use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use memsact::campaign::run_batch;
use memsact::capmodel::{
    decompose, geometric_gaps, ideal_capacitance, palmer_capacitance, rho_s_bound, serial_minimum,
    SerialCapacitance, SWEEP_MIN_FRACTION, SWEEP_POINTS,
};
use memsact::plant::static_pullin;
use memsact::simulator::{fmt_sig9, settle_metrics, SimTrace, Status};

use crate::config::{mask_overrides, ConfigIssue, RunConfig};
use crate::error::{from_model, CliError};

/// A configuration file together with its parsed contents.
pub struct Loaded {
    pub path: String,
    /// File contents with overridden keys blanked, for line lookups.
    pub text: String,
    pub config: RunConfig,
}

impl Loaded {
    pub fn read(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let path = path.display().to_string();
        let config = RunConfig::parse(&raw, overrides).map_err(|e| config_error(&path, e))?;
        let text = mask_overrides(&raw, overrides);
        config.validate(&text).map_err(|e| config_error(&path, e))?;
        Ok(Self { path, text, config })
    }

    fn check<T>(&self, r: Result<T, ConfigIssue>) -> Result<T, CliError> {
        r.map_err(|e| config_error(&self.path, e))
    }
}

fn config_error(path: &str, e: ConfigIssue) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: e.to_string(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub struct SweepOptions {
    pub gap_min_m: Option<f64>,
    pub gap_max_m: Option<f64>,
    pub points: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            gap_min_m: None,
            gap_max_m: None,
            points: SWEEP_POINTS,
        }
    }
}

pub const SWEEP_HEADER: &str = "gap_m,C_ideal_F,C_palmer_F,C_sub_F,C_ser_F";

/// Capacitance curves over a geometric gap grid from the largest gap down.
///
/// The real device follows the Palmer curve, rescaled to the tabulated
/// capacitance at the initial gap when one is configured.
pub fn cap_sweep(cfg: &Loaded, opts: &SweepOptions, out: &Path) -> Result<(), CliError> {
    let geom = cfg.check(
        cfg.config
            .geometry()
            .map_err(|e| crate::config::model_issue(&cfg.text, &e)),
    )?;
    let g0 = geom.initial_gap_m;
    let g_max = opts.gap_max_m.unwrap_or(g0);
    let g_min = opts.gap_min_m.unwrap_or(g0 * SWEEP_MIN_FRACTION);
    if opts.points < 2 {
        return Err(CliError::Usage(format!(
            "--points must be >= 2, got {}",
            opts.points
        )));
    }
    if !(g_max > 0.0 && g_max <= g0) {
        return Err(CliError::Usage(format!(
            "--gap-max must lie in (0, {g0:e}], got {g_max:e}"
        )));
    }
    let gaps = geometric_gaps(g_max, g_min, opts.points).map_err(from_model)?;

    let palmer_g0 = palmer_capacitance(&geom, g0).map_err(from_model)?;
    let c_ref = cfg.config.reference_capacitance().unwrap_or(palmer_g0);
    let scale = c_ref / palmer_g0;
    let real = |g: f64| palmer_capacitance(&geom, g).map(|c| c * scale);

    let mut w = create(out)?;
    let io = |e| CliError::io(out, e);
    writeln!(w, "{SWEEP_HEADER}").map_err(io)?;
    for &g in &gaps {
        let d = decompose(&geom, g, real, c_ref).map_err(from_model)?;
        let c_ser = match d.serial {
            SerialCapacitance::Finite(c) => c,
            SerialCapacitance::Unbounded => f64::INFINITY,
        };
        let row = [
            g,
            ideal_capacitance(&geom, g).map_err(from_model)?,
            palmer_capacitance(&geom, g).map_err(from_model)?,
            d.substitute_f,
            c_ser,
        ];
        let cells: Vec<String> = row.iter().map(|&v| fmt_sig9(v)).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let min = serial_minimum(&geom, &gaps, real, c_ref).map_err(from_model)?;
    match min.c_serial_f {
        SerialCapacitance::Finite(c) => {
            println!("C_ser_min_F={} gap_m={}", fmt_sig9(c), fmt_sig9(min.gap_m));
            println!(
                "rho_s_bar={:.6}",
                rho_s_bound(c_ref, c).map_err(from_model)?
            );
        }
        SerialCapacitance::Unbounded => {
            println!("C_ser_min_F=inf");
            println!("rho_s_bar={:.6}", 0.0);
        }
    }
    if let Some(tab) = cfg.check(cfg.config.tabulated_rho_s_bound(&cfg.text))? {
        println!("rho_s_bar_tabulated={tab:.6}");
    }
    Ok(())
}

/// Output file for one set-point in a batch directory.
pub fn trace_file_name(set_point: f64) -> String {
    format!("trace_sp{set_point}.csv")
}

pub struct SimulateOptions {
    pub set_points: Vec<f64>,
    pub jobs: NonZeroUsize,
}

fn summary_line(
    set_point: f64,
    trace: &SimTrace,
    cfg: &memsact::trajectory::TrajectoryConfig,
) -> String {
    let (final_error, settle) = match settle_metrics(trace, cfg) {
        Ok(m) => (
            format!("{:.6e}", m.final_error),
            m.settle_time
                .map_or("none".to_string(), |t| format!("{t:.4}")),
        ),
        Err(_) => ("nan".to_string(), "none".to_string()),
    };
    format!(
        "setpoint={set_point} final_error={final_error} settle_time={settle} status={}",
        trace.status
    )
}

/// Runs one closed-loop scenario per set-point.
///
/// A single set-point writes to `out` unless `out` is an existing directory;
/// several set-points write `trace_sp<v>.csv` files into the directory `out`.
pub fn simulate(cfg: &Loaded, opts: &SimulateOptions, out: &Path) -> Result<(), CliError> {
    if opts.set_points.is_empty() {
        return Err(CliError::Usage(
            "no set-point: pass --setpoint, --setpoints or set [trajectory] y_f".into(),
        ));
    }
    let mut scenarios = Vec::with_capacity(opts.set_points.len());
    for &y_f in &opts.set_points {
        if !(0.0..=1.0).contains(&y_f) {
            return Err(CliError::Usage(format!(
                "set-point must lie in [0, 1], got {y_f}"
            )));
        }
        scenarios.push(cfg.check(cfg.config.scenario(&cfg.text, y_f))?);
    }

    let directory = opts.set_points.len() > 1 || out.is_dir();
    if directory {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    }
    let target = |y_f: f64| -> PathBuf {
        if directory {
            out.join(trace_file_name(y_f))
        } else {
            out.to_path_buf()
        }
    };

    let traces = run_batch(&scenarios, opts.jobs);
    let mut failed = Vec::new();
    for ((&y_f, sc), res) in opts.set_points.iter().zip(&scenarios).zip(traces) {
        let trace = res.map_err(from_model)?;
        let path = target(y_f);
        let mut w = create(&path)?;
        trace
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        println!("{}", summary_line(y_f, &trace, &sc.trajectory));
        if trace.status == Status::NumericalFailure {
            failed.push(y_f.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "set-points {}",
            failed.join(", ")
        )))
    }
}

/// Static pull-in for the ideal device and for the configured serial-ratio
/// bound.
pub fn pullin(cfg: &Loaded) -> Result<(), CliError> {
    let plant = cfg.check(cfg.config.plant(&cfg.text))?;
    let rho_s = cfg.check(cfg.config.rho_s_bar(&cfg.text, &plant))?;
    for rho in [0.0, rho_s] {
        let p = static_pullin(rho).map_err(from_model)?;
        println!("rho_s={rho:.4} x_pi={:.4} u_pi={:.4}", p.x_pi, p.u_pi);
    }
    Ok(())
}
