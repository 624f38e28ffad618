//! Scenario configuration files.
//!
//! A run is described by a TOML document with the sections `[geometry]`,
//! `[physical]`, `[parasitics]`, `[controller]`, `[trajectory]` and
//! `[simulation]`. Every key is optional. Physical quantities carry their SI
//! unit in the key name (`_m`, `_kg`, `_F`, `_ohm`) and must be positive.
//! Unknown keys are rejected.

use std::ops::Range;

use memsact::capmodel::{DeviceGeometry, PalmerSerialRatio, TabulatedReference, EPSILON_0};
use memsact::controller::ControllerConfig;
use memsact::plant::{
    normalize, NormalizedParams, PhysicalParams, SerialParasitic, SerialRatio, State,
};
use memsact::simulator::{ControlHold, PlantForm, Scenario, DEFAULT_DT, X3_SEED};
use memsact::trajectory::TrajectoryConfig;
use serde::{Deserialize, Serialize};

/// Time the set-point is held after the transfer when `t_end` is not given.
pub const DEFAULT_HOLD: f64 = Scenario::HOLD_DURATION;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub physical: PhysicalSection,
    pub parasitics: ParasiticsSection,
    pub controller: ControllerSection,
    pub trajectory: TrajectorySection,
    pub simulation: SimulationSection,
}

/// Plate geometry. Defaults to the 600 µm x 300 µm device at a 305 µm gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub width_m: f64,
    pub length_m: f64,
    pub initial_gap_m: f64,
    #[serde(rename = "permittivity_F_per_m")]
    pub permittivity_f_per_m: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = DeviceGeometry::reference_device();
        Self {
            width_m: g.width_m,
            length_m: g.length_m,
            initial_gap_m: g.initial_gap_m,
            permittivity_f_per_m: EPSILON_0,
        }
    }
}

/// Either the four SI quantities, which fix `zeta` and `r`, or the
/// normalized `zeta` and `r` directly (both default to 1).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(rename = "damping_Ns_per_m", skip_serializing_if = "Option::is_none")]
    pub damping_ns_per_m: Option<f64>,
    #[serde(rename = "stiffness_N_per_m", skip_serializing_if = "Option::is_none")]
    pub stiffness_n_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resistance_ohm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SerialModel {
    /// Fixed `rho_s` from the `rho_s` key.
    #[default]
    Constant,
    /// Gap-dependent `rho_s` from the Palmer decomposition of the geometry.
    Palmer,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParasiticsSection {
    pub rho_p: f64,
    pub rho_s: f64,
    pub serial_model: SerialModel,
    /// Tabulated real capacitance at the initial gap.
    #[serde(
        rename = "reference_capacitance_F",
        skip_serializing_if = "Option::is_none"
    )]
    pub reference_capacitance_f: Option<f64>,
    /// Tabulated minimum of the serial capacitance over the travel.
    #[serde(rename = "serial_min_F", skip_serializing_if = "Option::is_none")]
    pub serial_min_f: Option<f64>,
}

/// Gains and uncertainty bounds. Unset nominal values and bounds default to
/// the plant's own values, i.e. an exactly known plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub kappa2: f64,
    pub kappa31: f64,
    pub kappa32: f64,
    pub kappa33: f64,
    pub kappa34: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_p_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_s_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    pub eps_q: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            k1: c.k1,
            k2: c.k2,
            k3: c.k3,
            kappa2: c.kappa2,
            kappa31: c.kappa31,
            kappa32: c.kappa32,
            kappa33: c.kappa33,
            kappa34: c.kappa34,
            zeta0: None,
            beta0: None,
            rho_p_bar: None,
            rho_s_bar: None,
            r_min: None,
            r_max: None,
            eps_q: c.eps_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub t_i: f64,
    pub t_f: f64,
    pub y_i: f64,
    /// Target deflection; a set-point given on the command line takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_f: Option<f64>,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            t_i: 0.0,
            t_f: TrajectoryConfig::DEFAULT_DURATION,
            y_i: 0.0,
            y_f: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKey {
    #[default]
    ChargeSquared,
    Charge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldKey {
    #[default]
    Stagewise,
    ZeroOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Defaults to `t_f` plus [`DEFAULT_HOLD`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub dt: f64,
    pub sample_every: usize,
    pub form: FormKey,
    pub hold: HoldKey,
    pub initial_x1: f64,
    pub initial_x2: f64,
    pub initial_x3: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            t_end: None,
            dt: DEFAULT_DT,
            sample_every: 1,
            form: FormKey::default(),
            hold: HoldKey::default(),
            initial_x1: 0.0,
            initial_x2: 0.0,
            initial_x3: X3_SEED,
        }
    }
}

/// A configuration problem, with the 1-based line it refers to when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn issue(line: Option<usize>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        line,
        message: message.into(),
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn span_line(text: &str, span: Option<Range<usize>>) -> Option<usize> {
    span.map(|s| line_of_offset(text, s.start))
}

/// Line on which `key` is assigned inside `[section]`.
pub fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(rest) = line.strip_prefix(key) {
            let rest = rest.trim_start();
            if rest.starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Copy of `text` with the lines of overridden keys blanked, so diagnostics
/// do not point at values that were replaced on the command line.
pub fn mask_overrides(text: &str, overrides: &[String]) -> String {
    let mut lines: Vec<&str> = text.lines().collect();
    for item in overrides {
        if let Ok((section, key, _)) = parse_override(item) {
            if let Some(n) = key_line(text, &section, &key) {
                lines[n - 1] = "";
            }
        }
    }
    lines.join("\n")
}

/// Section holding a model parameter, with its key in the file.
fn key_for(param: &str) -> Option<(&'static str, &'static str)> {
    const KEYS: &[(&str, &str, &str)] = &[
        ("width_m", "geometry", "width_m"),
        ("length_m", "geometry", "length_m"),
        ("initial_gap_m", "geometry", "initial_gap_m"),
        ("permittivity_F_per_m", "geometry", "permittivity_F_per_m"),
        ("mass_kg", "physical", "mass_kg"),
        ("damping_Ns_per_m", "physical", "damping_Ns_per_m"),
        ("stiffness_N_per_m", "physical", "stiffness_N_per_m"),
        ("resistance_ohm", "physical", "resistance_ohm"),
        ("zeta", "physical", "zeta"),
        ("r", "physical", "r"),
        ("rho_p", "parasitics", "rho_p"),
        ("parallel_F", "parasitics", "rho_p"),
        ("rho_s", "parasitics", "rho_s"),
        ("serial_F", "parasitics", "rho_s"),
        ("c0_F", "parasitics", "reference_capacitance_F"),
        ("c_serial_min_F", "parasitics", "serial_min_F"),
        ("k1", "controller", "k1"),
        ("k2", "controller", "k2"),
        ("k3", "controller", "k3"),
        ("kappa2", "controller", "kappa2"),
        ("kappa31", "controller", "kappa31"),
        ("kappa32", "controller", "kappa32"),
        ("kappa33", "controller", "kappa33"),
        ("kappa34", "controller", "kappa34"),
        ("zeta0", "controller", "zeta0"),
        ("beta0", "controller", "beta0"),
        ("rho_p_max", "controller", "rho_p_bar"),
        ("rho_s_max", "controller", "rho_s_bar"),
        ("r_min", "controller", "r_min"),
        ("eps_q", "controller", "eps_q"),
        ("t_f", "trajectory", "t_f"),
        ("y_i", "trajectory", "y_i"),
        ("y_f", "trajectory", "y_f"),
        ("dt", "simulation", "dt"),
        ("t_end", "simulation", "t_end"),
        ("sample_every", "simulation", "sample_every"),
    ];
    KEYS.iter()
        .find(|(p, _, _)| *p == param)
        .map(|&(_, s, k)| (s, k))
}

/// Locates the line a model error refers to.
pub fn model_issue(text: &str, err: &memsact::Error) -> ConfigIssue {
    let line = match err {
        memsact::Error::InvalidParameter { name, .. } => {
            key_for(name).and_then(|(section, key)| key_line(text, section, key))
        }
        _ => None,
    };
    issue(line, err.to_string())
}

const SI_SUFFIXES: &[&str] = &["_m", "_kg", "_F", "_ohm"];

/// Rejects non-positive values for keys with an SI unit suffix.
fn check_units(text: &str, table: &toml::Table) -> Result<(), ConfigIssue> {
    for (section, value) in table {
        let Some(entries) = value.as_table() else {
            continue;
        };
        for (key, v) in entries {
            if !SI_SUFFIXES.iter().any(|s| key.ends_with(s)) {
                continue;
            }
            let number = v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
            let ok = matches!(number, Some(x) if x.is_finite() && x > 0.0);
            if !ok {
                return Err(issue(
                    key_line(text, section, key),
                    format!("[{section}] {key} must be a finite number > 0, got {v}"),
                ));
            }
        }
    }
    Ok(())
}

/// Parses a `section.key=value` override. The value is read as a TOML value,
/// falling back to a bare string.
pub fn parse_override(item: &str) -> Result<(String, String, toml::Value), ConfigIssue> {
    let bad = || {
        issue(
            None,
            format!("--set expects section.key=value, got `{item}`"),
        )
    };
    let (path, raw) = item.split_once('=').ok_or_else(bad)?;
    let (section, key) = path.trim().split_once('.').ok_or_else(bad)?;
    if section.is_empty() || key.is_empty() {
        return Err(bad());
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((section.to_string(), key.to_string(), value))
}

impl RunConfig {
    /// Parses a configuration document and applies `section.key=value`
    /// overrides on top of it.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigIssue> {
        // typed parse of the file alone, for line-accurate diagnostics
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| issue(span_line(text, e.span()), e.message()))?;
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| issue(span_line(text, e.span()), e.message()))?;
        if overrides.is_empty() {
            check_units(text, &table)?;
            return Ok(cfg);
        }
        for item in overrides {
            let (section, key, value) = parse_override(item)?;
            let entry = table
                .entry(section.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let Some(sec) = entry.as_table_mut() else {
                return Err(issue(
                    None,
                    format!("--set {item}: `{section}` is not a section"),
                ));
            };
            sec.insert(key, value);
        }
        check_units(&mask_overrides(text, overrides), &table)?;
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| issue(None, format!("--set: {}", e.message())))
    }

    /// Checks every section against the model invariants.
    pub fn validate(&self, text: &str) -> Result<(), ConfigIssue> {
        self.tabulated()?;
        let y_f = self.trajectory.y_f.unwrap_or(self.trajectory.y_i);
        self.scenario(text, y_f).map(|_| ())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn geometry(&self) -> memsact::Result<DeviceGeometry> {
        let g = &self.geometry;
        DeviceGeometry::new(
            g.width_m,
            g.length_m,
            g.initial_gap_m,
            g.permittivity_f_per_m,
        )
    }

    fn si_parameters(&self) -> Result<Option<[f64; 4]>, ConfigIssue> {
        let p = &self.physical;
        let si = [
            p.mass_kg,
            p.damping_ns_per_m,
            p.stiffness_n_per_m,
            p.resistance_ohm,
        ];
        match si {
            [Some(m), Some(b), Some(k), Some(r)] => {
                if p.zeta.is_some() || p.r.is_some() {
                    return Err(issue(
                        None,
                        "[physical] give either the SI parameters or zeta and r, not both",
                    ));
                }
                Ok(Some([m, b, k, r]))
            }
            [None, None, None, None] => Ok(None),
            _ => Err(issue(
                None,
                "[physical] mass_kg, damping_Ns_per_m, stiffness_N_per_m and resistance_ohm \
                 must be given together",
            )),
        }
    }

    fn tabulated(&self) -> Result<Option<TabulatedReference>, ConfigIssue> {
        let p = &self.parasitics;
        match (p.reference_capacitance_f, p.serial_min_f) {
            (Some(c), Some(m)) => Ok(Some(TabulatedReference {
                c_at_initial_gap_f: c,
                c_serial_min_f: m,
            })),
            (None, Some(_)) => Err(issue(
                None,
                "[parasitics] serial_min_F needs reference_capacitance_F",
            )),
            _ => Ok(None),
        }
    }

    /// Tabulated real capacitance at the initial gap, if configured.
    pub fn reference_capacitance(&self) -> Option<f64> {
        self.parasitics.reference_capacitance_f
    }

    /// Worst-case serial ratio from the tabulated reference, if configured.
    pub fn tabulated_rho_s_bound(&self, text: &str) -> Result<Option<f64>, ConfigIssue> {
        self.tabulated()?
            .map(|t| t.rho_s_bound().map_err(|e| model_issue(text, &e)))
            .transpose()
    }

    /// True plant parameters.
    pub fn plant(&self, text: &str) -> Result<NormalizedParams, ConfigIssue> {
        let model = |e: memsact::Error| model_issue(text, &e);
        let geometry = self.geometry().map_err(model)?;
        let par = &self.parasitics;
        if let Some([mass, damping, stiffness, resistance]) = self.si_parameters()? {
            if par.rho_s < 0.0 || !par.rho_s.is_finite() {
                return Err(model(memsact::Error::InvalidParameter {
                    name: "rho_s",
                    reason: format!("must be finite and >= 0, got {}", par.rho_s),
                }));
            }
            let c0 = geometry.c0();
            let c_serial = match par.serial_model {
                SerialModel::Palmer => SerialParasitic::Palmer,
                SerialModel::Constant if par.rho_s == 0.0 => SerialParasitic::None,
                SerialModel::Constant => SerialParasitic::Constant(c0 / par.rho_s),
            };
            let phys = PhysicalParams {
                mass_kg: mass,
                damping_ns_per_m: damping,
                stiffness_n_per_m: stiffness,
                resistance_ohm: resistance,
                geometry,
                c_parallel_f: par.rho_p * c0,
                c_serial,
            };
            return normalize(&phys).map_err(model);
        }
        let rho_s = match par.serial_model {
            SerialModel::Constant => SerialRatio::Constant(par.rho_s),
            SerialModel::Palmer => {
                SerialRatio::Palmer(PalmerSerialRatio::new(geometry).map_err(model)?)
            }
        };
        let zeta = self.physical.zeta.unwrap_or(1.0);
        let r = self.physical.r.unwrap_or(1.0);
        NormalizedParams::dimensionless(zeta, r, par.rho_p, rho_s).map_err(model)
    }

    /// Serial-ratio bound the controller designs for: `rho_s_bar` if set, else
    /// the tabulated bound, else the plant's own worst case.
    pub fn rho_s_bar(&self, text: &str, plant: &NormalizedParams) -> Result<f64, ConfigIssue> {
        if let Some(v) = self.controller.rho_s_bar {
            return Ok(v);
        }
        if let Some(v) = self.tabulated_rho_s_bound(text)? {
            return Ok(v);
        }
        match plant.rho_s {
            SerialRatio::Constant(v) => Ok(v),
            SerialRatio::Palmer(p) => p.bound().map_err(|e| model_issue(text, &e)),
        }
    }

    pub fn controller(
        &self,
        text: &str,
        plant: &NormalizedParams,
    ) -> Result<ControllerConfig, ConfigIssue> {
        let c = &self.controller;
        let cfg = ControllerConfig {
            k1: c.k1,
            k2: c.k2,
            k3: c.k3,
            kappa2: c.kappa2,
            kappa31: c.kappa31,
            kappa32: c.kappa32,
            kappa33: c.kappa33,
            kappa34: c.kappa34,
            zeta0: c.zeta0.unwrap_or(plant.zeta),
            beta0: c.beta0,
            rho_p_max: c.rho_p_bar.unwrap_or(plant.rho_p),
            rho_s_max: self.rho_s_bar(text, plant)?,
            r_min: c.r_min.unwrap_or(plant.r),
            r_max: c.r_max.unwrap_or(plant.r),
            eps_q: c.eps_q,
        };
        cfg.validate().map_err(|e| model_issue(text, &e))?;
        Ok(cfg)
    }

    /// Target deflection: the command-line value, else `[trajectory] y_f`.
    pub fn set_point(&self, cli: Option<f64>) -> Option<f64> {
        cli.or(self.trajectory.y_f)
    }

    pub fn scenario(&self, text: &str, y_f: f64) -> Result<Scenario, ConfigIssue> {
        let model = |e: memsact::Error| model_issue(text, &e);
        let plant = self.plant(text)?;
        let controller = self.controller(text, &plant)?;
        let t = &self.trajectory;
        let trajectory = TrajectoryConfig::new(t.t_i, t.t_f, t.y_i, y_f).map_err(model)?;
        let s = &self.simulation;
        let sc = Scenario {
            plant,
            controller,
            trajectory,
            t_end: s.t_end.unwrap_or(t.t_f + DEFAULT_HOLD),
            dt: s.dt,
            initial: State::new(s.initial_x1, s.initial_x2, s.initial_x3),
            sample_every: s.sample_every,
            form: match s.form {
                FormKey::ChargeSquared => PlantForm::ChargeSquared,
                FormKey::Charge => PlantForm::Charge,
            },
            hold: match s.hold {
                HoldKey::Stagewise => ControlHold::Stagewise,
                HoldKey::ZeroOrder => ControlHold::ZeroOrder,
            },
        };
        sc.validate().map_err(model)?;
        Ok(sc)
    }
}
