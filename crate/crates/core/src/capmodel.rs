//! Capacitance models for a rectangular parallel-plate device.
//!
//! The real device (ideal field plus fringing) is represented as an ideal-law
//! *substitute* capacitor matched to the device at the initial gap, in series
//! with a gap-dependent *serial* capacitor. The serial capacitor is unbounded at
//! the initial gap and only its minimum over the travel matters to the
//! controller, through the ratio `rho_s = C0 / C_ser_min`.
//!
//! Plates are assumed to have zero thickness.

use std::f64::consts::PI;

use crate::error::{invalid, require_positive, Error, Result};

/// Vacuum permittivity in F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Number of gaps in the default serial-capacitance sweep.
pub const SWEEP_POINTS: usize = 10_000;

/// Smallest gap of the default sweep, as a fraction of the initial gap.
pub const SWEEP_MIN_FRACTION: f64 = 1e-3;

/// Finite-element reference values for the 600 µm x 300 µm device at a
/// 305 µm initial gap. Usable in place of the Palmer curve where a tabulated
/// device characterisation is preferred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabulatedReference {
    /// Real capacitance at the initial gap (F).
    pub c_at_initial_gap_f: f64,
    /// Minimum of the serial capacitance over the travel (F).
    pub c_serial_min_f: f64,
}

impl TabulatedReference {
    pub const FEM_600X300_305: TabulatedReference = TabulatedReference {
        c_at_initial_gap_f: 1.474e-14,
        c_serial_min_f: 6.47e-14,
    };

    pub fn rho_s_bound(&self) -> Result<f64> {
        rho_s_bound(self.c_at_initial_gap_f, self.c_serial_min_f)
    }
}

/// Plate dimensions, initial gap and gap permittivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceGeometry {
    pub width_m: f64,
    pub length_m: f64,
    pub initial_gap_m: f64,
    pub permittivity_f_per_m: f64,
}

impl DeviceGeometry {
    pub fn new(
        width_m: f64,
        length_m: f64,
        initial_gap_m: f64,
        permittivity_f_per_m: f64,
    ) -> Result<Self> {
        let geom = Self {
            width_m,
            length_m,
            initial_gap_m,
            permittivity_f_per_m,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// 600 µm x 300 µm plates at a 305 µm gap in vacuum.
    pub fn reference_device() -> Self {
        Self {
            width_m: 600e-6,
            length_m: 300e-6,
            initial_gap_m: 305e-6,
            permittivity_f_per_m: EPSILON_0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("width_m", self.width_m)?;
        require_positive("length_m", self.length_m)?;
        require_positive("initial_gap_m", self.initial_gap_m)?;
        require_positive("permittivity_F_per_m", self.permittivity_f_per_m)
    }

    pub fn area_m2(&self) -> f64 {
        self.width_m * self.length_m
    }

    /// Ideal capacitance at the initial gap, `eps * W * L / G0`.
    pub fn c0(&self) -> f64 {
        self.permittivity_f_per_m * self.area_m2() / self.initial_gap_m
    }

    /// Same device with width and length exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            width_m: self.length_m,
            length_m: self.width_m,
            ..*self
        }
    }
}

fn check_gap(gap_m: f64) -> Result<()> {
    if gap_m.is_finite() && gap_m > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "gap must be finite and > 0, got {gap_m}"
        )))
    }
}

/// Capacitance without fringing, `eps * W * L / G`.
pub fn ideal_capacitance(geom: &DeviceGeometry, gap_m: f64) -> Result<f64> {
    check_gap(gap_m)?;
    Ok(geom.permittivity_f_per_m * geom.area_m2() / gap_m)
}

/// Fringing correction along one plate side of length `side_m`:
/// `1 + G/(pi s) + G/(pi s) * ln(2 pi s / G)`.
pub fn fringing_factor(gap_m: f64, side_m: f64) -> f64 {
    let g = gap_m / (PI * side_m);
    1.0 + g + g * (2.0 * PI * side_m / gap_m).ln()
}

/// Palmer's two-dimensional fringing formula: the ideal capacitance scaled by
/// one fringing factor per plate side.
pub fn palmer_capacitance(geom: &DeviceGeometry, gap_m: f64) -> Result<f64> {
    let ideal = ideal_capacitance(geom, gap_m)?;
    Ok(ideal * fringing_factor(gap_m, geom.width_m) * fringing_factor(gap_m, geom.length_m))
}

/// Ideal-law capacitor matched to `c_ref_at_g0` at the initial gap.
pub fn substitute_capacitance(geom: &DeviceGeometry, gap_m: f64, c_ref_at_g0: f64) -> Result<f64> {
    check_gap(gap_m)?;
    if !(c_ref_at_g0.is_finite() && c_ref_at_g0 > 0.0) {
        return Err(Error::Domain(format!(
            "reference capacitance must be finite and > 0, got {c_ref_at_g0}"
        )));
    }
    Ok(c_ref_at_g0 * geom.initial_gap_m / gap_m)
}

/// Serial capacitance, which is unbounded at the initial gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SerialCapacitance {
    Finite(f64),
    Unbounded,
}

impl SerialCapacitance {
    /// `1 / C`, zero when unbounded.
    pub fn reciprocal(&self) -> f64 {
        match *self {
            SerialCapacitance::Finite(c) => 1.0 / c,
            SerialCapacitance::Unbounded => 0.0,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            SerialCapacitance::Finite(c) => Some(c),
            SerialCapacitance::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, SerialCapacitance::Unbounded)
    }
}

/// Relative slack under which the substitute and real capacitances are
/// treated as equal (rounding only).
const EQUALITY_SLACK: f64 = 1e-12;

/// Capacitance that, in series with the substitute capacitor, reproduces
/// `real_model(gap)`.
///
/// `gap_m` must lie in `(0, G0]`. Returns [`SerialCapacitance::Unbounded`] at
/// `G0`, and a [`Error::ModelInconsistency`] if the substitute falls below the
/// real curve anywhere else.
pub fn serial_capacitance<F>(
    geom: &DeviceGeometry,
    gap_m: f64,
    real_model: F,
    c_ref_at_g0: f64,
) -> Result<SerialCapacitance>
where
    F: Fn(f64) -> Result<f64>,
{
    check_gap(gap_m)?;
    if gap_m > geom.initial_gap_m {
        return Err(Error::Domain(format!(
            "gap {gap_m:e} m exceeds the initial gap {:e} m",
            geom.initial_gap_m
        )));
    }
    let c_sub = substitute_capacitance(geom, gap_m, c_ref_at_g0)?;
    if gap_m == geom.initial_gap_m {
        return Ok(SerialCapacitance::Unbounded);
    }
    let c_real = real_model(gap_m)?;
    let diff = c_sub - c_real;
    if diff < -EQUALITY_SLACK * c_sub {
        return Err(Error::ModelInconsistency {
            gap_m,
            substitute_f: c_sub,
            real_f: c_real,
        });
    }
    if diff <= EQUALITY_SLACK * c_sub {
        return Ok(SerialCapacitance::Unbounded);
    }
    Ok(SerialCapacitance::Finite(c_sub * c_real / diff))
}

/// Real, substitute and serial capacitance at one gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceDecomposition {
    pub gap_m: f64,
    pub total_f: f64,
    pub substitute_f: f64,
    pub serial: SerialCapacitance,
}

impl CapacitanceDecomposition {
    /// Series combination of substitute and serial capacitors.
    pub fn series_total(&self) -> f64 {
        1.0 / (1.0 / self.substitute_f + self.serial.reciprocal())
    }
}

pub fn decompose<F>(
    geom: &DeviceGeometry,
    gap_m: f64,
    real_model: F,
    c_ref_at_g0: f64,
) -> Result<CapacitanceDecomposition>
where
    F: Fn(f64) -> Result<f64>,
{
    let total_f = real_model(gap_m)?;
    let substitute_f = substitute_capacitance(geom, gap_m, c_ref_at_g0)?;
    let serial = serial_capacitance(geom, gap_m, &real_model, c_ref_at_g0)?;
    Ok(CapacitanceDecomposition {
        gap_m,
        total_f,
        substitute_f,
        serial,
    })
}

/// `n` gaps spaced geometrically from `g_max` down to `g_min`, both included.
pub fn geometric_gaps(g_max: f64, g_min: f64, n: usize) -> Result<Vec<f64>> {
    check_gap(g_max)?;
    check_gap(g_min)?;
    if n < 2 {
        return Err(invalid("points", format!("need at least 2, got {n}")));
    }
    if g_min > g_max {
        return Err(Error::Domain(format!(
            "gap range is reversed: {g_min:e} > {g_max:e}"
        )));
    }
    let ratio = (g_min / g_max).ln();
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => g_max,
            _ if i == n - 1 => g_min,
            _ => g_max * (ratio * i as f64 / last).exp(),
        })
        .collect())
}

/// Default sweep grid: [`SWEEP_POINTS`] gaps from `G0` down to `G0 * SWEEP_MIN_FRACTION`.
pub fn default_sweep_gaps(geom: &DeviceGeometry) -> Vec<f64> {
    let g0 = geom.initial_gap_m;
    geometric_gaps(g0, g0 * SWEEP_MIN_FRACTION, SWEEP_POINTS).expect("valid geometry")
}

/// Location and value of the smallest serial capacitance over a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerialMinimum {
    pub gap_m: f64,
    pub index: usize,
    pub c_serial_f: SerialCapacitance,
}

pub fn serial_minimum<F>(
    geom: &DeviceGeometry,
    gaps: &[f64],
    real_model: F,
    c_ref_at_g0: f64,
) -> Result<SerialMinimum>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut best: Option<SerialMinimum> = None;
    for (index, &gap_m) in gaps.iter().enumerate() {
        let c = serial_capacitance(geom, gap_m, &real_model, c_ref_at_g0)?;
        let better = match (best.map(|b| b.c_serial_f), c) {
            (None, _) => true,
            (Some(SerialCapacitance::Unbounded), SerialCapacitance::Finite(_)) => true,
            (Some(SerialCapacitance::Finite(b)), SerialCapacitance::Finite(v)) => v < b,
            _ => false,
        };
        if better {
            best = Some(SerialMinimum {
                gap_m,
                index,
                c_serial_f: c,
            });
        }
    }
    best.ok_or_else(|| invalid("gaps", "empty sweep"))
}

/// Worst-case serial-parasitic ratio `C0 / C_ser_min`.
pub fn rho_s_bound(c0_f: f64, c_serial_min_f: f64) -> Result<f64> {
    require_positive("c0_F", c0_f)?;
    if c_serial_min_f == f64::INFINITY {
        return Ok(0.0);
    }
    require_positive("c_serial_min_F", c_serial_min_f)?;
    Ok(c0_f / c_serial_min_f)
}

/// Gap-dependent serial ratio `rho_s(x1) = C0 / C_ser(G0 (1 - x1))` with the
/// Palmer curve as the real device, matched at the initial gap.
///
/// The ratio is invariant under a uniform rescaling of the real curve, so it
/// equally describes a Palmer curve calibrated to a tabulated `C(G0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmerSerialRatio {
    geometry: DeviceGeometry,
    c_ref_f: f64,
}

impl PalmerSerialRatio {
    pub fn new(geometry: DeviceGeometry) -> Result<Self> {
        geometry.validate()?;
        let c_ref_f = palmer_capacitance(&geometry, geometry.initial_gap_m)?;
        Ok(Self { geometry, c_ref_f })
    }

    pub fn geometry(&self) -> &DeviceGeometry {
        &self.geometry
    }

    /// Ratio at normalized deflection `x1`; zero at both ends of the travel.
    pub fn at(&self, x1: f64) -> f64 {
        let x1 = x1.clamp(0.0, 1.0);
        if x1 <= 0.0 || x1 >= 1.0 {
            return 0.0;
        }
        let g0 = self.geometry.initial_gap_m;
        let gap = g0 * (1.0 - x1);
        let c_real = palmer_capacitance(&self.geometry, gap).expect("gap in (0, G0)");
        let c_sub = self.c_ref_f * g0 / gap;
        (self.c_ref_f * (1.0 / c_real - 1.0 / c_sub)).max(0.0)
    }

    /// Maximum of [`Self::at`] over the default sweep.
    pub fn bound(&self) -> Result<f64> {
        let gaps = default_sweep_gaps(&self.geometry);
        let min = serial_minimum(
            &self.geometry,
            &gaps,
            |g| palmer_capacitance(&self.geometry, g),
            self.c_ref_f,
        )?;
        match min.c_serial_f {
            SerialCapacitance::Finite(c) => rho_s_bound(self.c_ref_f, c),
            SerialCapacitance::Unbounded => Ok(0.0),
        }
    }
}
