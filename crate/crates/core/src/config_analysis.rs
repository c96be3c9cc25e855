//! Compactness versus hovering-efficiency comparison of n-rotor layouts.
//!
//! For a fixed vehicle mass and a fixed hovering efficiency the rotor radius
//! shrinks as `1/√n`, but the circle circumscribing `n` rotors in a ring
//! grows faster. The table produced here quantifies that trade-off.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const DEFAULT_RHO: f64 = 1.225;
pub const DEFAULT_G: f64 = 9.81;
pub const DEFAULT_N_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("`{name}` must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("`{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("rotor count must be at least 1")]
    NoRotors,
    #[error("failed to write table: {0}")]
    Io(String),
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ParamError::NotPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorConfigQuery {
    pub n: usize,
    pub mass: f64,
    pub rotor_radius: f64,
    pub rho: f64,
    pub g: f64,
}

impl RotorConfigQuery {
    pub fn new(n: usize, mass: f64, rotor_radius: f64) -> Self {
        Self { n, mass, rotor_radius, rho: DEFAULT_RHO, g: DEFAULT_G }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n == 0 {
            return Err(ParamError::NoRotors);
        }
        positive("mass", self.mass)?;
        positive("rotor_radius", self.rotor_radius)?;
        positive("rho", self.rho)?;
        positive("g", self.g)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfigReportRow {
    pub n: usize,
    pub eta_h: f64,
    pub r_circ: f64,
    pub s_c: f64,
    pub area_ratio: f64,
    pub diameter_ratio: f64,
}

/// Ideal induced power (W) of one rotor of radius `r` producing `thrust`.
pub fn ideal_power(thrust: f64, r: f64, rho: f64) -> Result<f64, ParamError> {
    positive("rotor_radius", r)?;
    positive("rho", rho)?;
    if !(thrust >= 0.0) {
        return Err(ParamError::Negative { name: "thrust", value: thrust });
    }
    Ok((thrust.powi(3) / (2.0 * PI * r * r * rho)).sqrt())
}

/// Hovering efficiency in kg/W, closed form.
pub fn hover_efficiency(q: &RotorConfigQuery) -> Result<f64, ParamError> {
    q.validate()?;
    let n = q.n as f64;
    Ok(q.rotor_radius * (2.0 * PI * n * q.rho).sqrt() / (q.g * (q.mass * q.g).sqrt()))
}

pub fn circumscribed_radius(n: usize, r: f64) -> Result<f64, ParamError> {
    positive("rotor_radius", r)?;
    match n {
        0 => Err(ParamError::NoRotors),
        1 => Ok(r),
        _ => {
            let s = (PI / n as f64).sin();
            Ok((1.0 + s) / s * r)
        }
    }
}

/// Area of the smallest circle enclosing the layout, expressed through the
/// hovering efficiency `eta_h` instead of the rotor radius.
pub fn footprint_area(q: &RotorConfigQuery, eta_h: f64) -> Result<f64, ParamError> {
    q.validate()?;
    positive("eta_h", eta_h)?;
    let base = eta_h * eta_h * q.mass * q.g.powi(3) / (2.0 * q.rho);
    if q.n == 1 {
        return Ok(base);
    }
    let n = q.n as f64;
    let s = (PI / n).sin();
    Ok(base * (1.0 + s).powi(2) / (n * s * s))
}

/// Rotor radius that gives `n` rotors the hovering efficiency `eta_h`.
fn radius_for_efficiency(q: &RotorConfigQuery, eta_h: f64) -> f64 {
    eta_h * q.g * (q.mass * q.g).sqrt() / (2.0 * PI * q.n as f64 * q.rho).sqrt()
}

/// One row per rotor count `1..=n_max`, all at the hovering efficiency of
/// `q` and the same mass, with ratios normalized to the single rotor.
pub fn generate_config_table(
    q: &RotorConfigQuery,
    n_max: usize,
) -> Result<Vec<ConfigReportRow>, ParamError> {
    if n_max == 0 {
        return Err(ParamError::NoRotors);
    }
    let eta_h = hover_efficiency(q)?;
    let single = footprint_area(&RotorConfigQuery { n: 1, ..*q }, eta_h)?;
    (1..=n_max)
        .map(|n| {
            let qn = RotorConfigQuery { n, ..*q };
            let s_c = footprint_area(&qn, eta_h)?;
            let area_ratio = s_c / single;
            Ok(ConfigReportRow {
                n,
                eta_h,
                r_circ: circumscribed_radius(n, radius_for_efficiency(&qn, eta_h))?,
                s_c,
                area_ratio,
                diameter_ratio: area_ratio.sqrt(),
            })
        })
        .collect()
}

/// CSV with columns `n,eta_h,R_circ,S_c,area_ratio,diameter_ratio`.
pub fn write_config_table<W: Write>(rows: &[ConfigReportRow], out: W) -> Result<(), ParamError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| ParamError::Io(e.to_string());
    w.write_record(["n", "eta_h", "R_circ", "S_c", "area_ratio", "diameter_ratio"]).map_err(io)?;
    for row in rows {
        w.write_record([
            row.n.to_string(),
            format!("{:.9e}", row.eta_h),
            format!("{:.9e}", row.r_circ),
            format!("{:.9e}", row.s_c),
            format!("{:.12}", row.area_ratio),
            format!("{:.12}", row.diameter_ratio),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| ParamError::Io(e.to_string()))
}

pub fn write_config_table_file(rows: &[ConfigReportRow], path: &Path) -> Result<(), ParamError> {
    let file = std::fs::File::create(path).map_err(|e| ParamError::Io(e.to_string()))?;
    write_config_table(rows, std::io::BufWriter::new(file))
}
