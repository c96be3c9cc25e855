//! TOML scenario files.
//!
//! ```toml
//! [vehicle]          # all keys optional
//! mass = 0.952
//! inertia = [8e-3, 8e-3, 4e-3]     # diagonal, or a 3x3 array of rows
//!
//! [gains]            # scalar, diagonal or 3x3 per gain
//! kp = 2.5
//!
//! [sim]
//! dt = 0.001
//!
//! [scenario]
//! kind = "figure8"   # required: hover | figure8 | attitude_profile
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::trajectory::{AttitudeProfileReference, AttitudeProfileSpec, Figure8Flight, Figure8Segment, TrajectoryError};
use crate::actuation::VehicleParams;
use crate::control::{ControlMode, ControllerGains, ModeSchedule, TrajectorySample};
use crate::dynamics::{RigidBodyState, SimConfig, SimError};
use crate::so3::{Mat3, Rotation, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: PathBuf, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum MatrixSpec {
    Scalar(f64),
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl MatrixSpec {
    fn to_mat3(self) -> Mat3 {
        match self {
            MatrixSpec::Scalar(s) => Mat3::identity() * s,
            MatrixSpec::Diagonal(d) => Mat3::from_diagonal(&Vec3::from(d)),
            MatrixSpec::Full(rows) => Mat3::from_fn(|i, j| rows[i][j]),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    mass: Option<f64>,
    inertia: Option<MatrixSpec>,
    l1: Option<f64>,
    l2: Option<f64>,
    k_cs: Option<f64>,
    km_over_kf: Option<f64>,
    angle_max_deg: Option<f64>,
    f_max: Option<f64>,
    f1_min: Option<f64>,
    rho: Option<f64>,
    g: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    kp: Option<MatrixSpec>,
    kv: Option<MatrixSpec>,
    kr: Option<MatrixSpec>,
    kp_w: Option<MatrixSpec>,
    ki_w: Option<MatrixSpec>,
    kd_w: Option<MatrixSpec>,
    integral_limit: Option<[f64; 3]>,
    derivative_cutoff_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    duration: Option<f64>,
    controller_period: Option<f64>,
    renorm_interval: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModeEntry {
    t: f64,
    mode: ControlMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    mode: ControlMode,
    v_max: f64,
    a_max: f64,
    #[serde(default = "one")]
    laps: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFigure8 {
    amplitude_x: Option<f64>,
    amplitude_y: Option<f64>,
    altitude: Option<f64>,
    ramp_time: Option<f64>,
    #[serde(default)]
    segments: Vec<RawSegment>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    rate: Option<f64>,
    max_angle_deg: Option<f64>,
    hold_duration: Option<f64>,
    total_duration: Option<f64>,
    axis: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    kind: Option<String>,
    mode: Option<ControlMode>,
    mode_schedule: Option<Vec<RawModeEntry>>,
    position: Option<[f64; 3]>,
    attitude_deg: Option<[f64; 3]>,
    initial_offset: Option<[f64; 3]>,
    output: Option<String>,
    figure8: Option<RawFigure8>,
    attitude_profile: Option<RawProfile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    vehicle: RawVehicle,
    #[serde(default)]
    gains: RawGains,
    #[serde(default)]
    sim: RawSim,
    scenario: Option<RawScenario>,
}

/// What the vehicle is asked to follow.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySpec {
    Hover(TrajectorySample),
    Figure8(Figure8Flight),
    AttitudeProfile(AttitudeProfileReference),
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub vehicle: VehicleParams,
    pub gains: ControllerGains,
    pub sim: SimConfig,
    pub trajectory: TrajectorySpec,
    pub schedule: ModeSchedule,
    pub initial_state: RigidBodyState,
    /// Telemetry CSV destination, relative paths taken as given.
    pub output: Option<PathBuf>,
}

fn vehicle_from_raw(raw: &RawVehicle) -> Result<VehicleParams, ConfigError> {
    let d = VehicleParams::default();
    let v = VehicleParams {
        mass: raw.mass.unwrap_or(d.mass),
        inertia: raw.inertia.map(MatrixSpec::to_mat3).unwrap_or(d.inertia),
        l1: raw.l1.unwrap_or(d.l1),
        l2: raw.l2.unwrap_or(d.l2),
        k_cs: raw.k_cs.unwrap_or(d.k_cs),
        km_over_kf: raw.km_over_kf.unwrap_or(d.km_over_kf),
        angle_max: raw.angle_max_deg.map(f64::to_radians).unwrap_or(d.angle_max),
        f_max: raw.f_max.unwrap_or(d.f_max),
        f1_min: raw.f1_min.unwrap_or(d.f1_min),
        rho: raw.rho.unwrap_or(d.rho),
        g: raw.g.unwrap_or(d.g),
    };
    v.validate().map_err(|e| {
        let key = if e.key == "angle_max" { "angle_max_deg" } else { e.key };
        invalid(format!("vehicle.{key}"), e.reason)
    })?;
    Ok(v)
}

fn gains_from_raw(raw: &RawGains) -> Result<ControllerGains, ConfigError> {
    let d = ControllerGains::default();
    let m = |s: Option<MatrixSpec>, default: Mat3| s.map(MatrixSpec::to_mat3).unwrap_or(default);
    let g = ControllerGains {
        kp: m(raw.kp, d.kp),
        kv: m(raw.kv, d.kv),
        kr: m(raw.kr, d.kr),
        kp_w: m(raw.kp_w, d.kp_w),
        ki_w: m(raw.ki_w, d.ki_w),
        kd_w: m(raw.kd_w, d.kd_w),
        integral_limit: raw.integral_limit.map(Vec3::from).unwrap_or(d.integral_limit),
        derivative_cutoff_hz: raw.derivative_cutoff_hz.unwrap_or(d.derivative_cutoff_hz),
    };
    g.validate().map_err(|key| invalid(format!("gains.{key}"), "must be positive definite"))?;
    Ok(g)
}

fn trajectory_error(prefix: &str, e: TrajectoryError) -> ConfigError {
    match e {
        TrajectoryError::Infeasible { key, value } => {
            invalid(format!("{prefix}.{key}"), format!("infeasible limit {value}"))
        }
        TrajectoryError::Invalid { key, reason } => invalid(format!("{prefix}.{key}"), reason),
    }
}

fn euler_deg(a: [f64; 3]) -> Rotation {
    Rotation::from_euler(a[0].to_radians(), a[1].to_radians(), a[2].to_radians())
}

fn round_up_to(x: f64, step: f64) -> f64 {
    (x / step - 1e-9).ceil() * step
}

/// Parses and validates a scenario from TOML text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let scenario = raw.scenario.ok_or_else(|| ConfigError::Missing("scenario.kind".into()))?;
    let kind = scenario.kind.clone().ok_or_else(|| ConfigError::Missing("scenario.kind".into()))?;

    let vehicle = vehicle_from_raw(&raw.vehicle)?;
    let gains = gains_from_raw(&raw.gains)?;
    let d = SimConfig::default();
    let mut sim = SimConfig {
        dt: raw.sim.dt.unwrap_or(d.dt),
        duration: raw.sim.duration.unwrap_or(d.duration),
        controller_period: raw.sim.controller_period.unwrap_or(d.controller_period),
        renorm_interval: raw.sim.renorm_interval.unwrap_or(d.renorm_interval),
    };

    let position = Vec3::from(scenario.position.unwrap_or([0.0, 0.0, 1.2]));
    let offset = Vec3::from(scenario.initial_offset.unwrap_or([0.0; 3]));
    let attitude = euler_deg(scenario.attitude_deg.unwrap_or([0.0; 3]));
    let mode = scenario.mode.unwrap_or(ControlMode::FullyActuated);

    let (trajectory, mut schedule, start, natural_duration) = match kind.as_str() {
        "hover" => (
            TrajectorySpec::Hover(TrajectorySample::hover(position, attitude)),
            ModeSchedule::constant(mode),
            position,
            None,
        ),
        "figure8" => {
            let f8 = scenario.figure8.as_ref().ok_or_else(|| ConfigError::Missing("scenario.figure8".into()))?;
            if f8.segments.is_empty() {
                return Err(ConfigError::Missing("scenario.figure8.segments".into()));
            }
            let segments: Vec<_> = f8
                .segments
                .iter()
                .map(|s| Figure8Segment { mode: s.mode, v_max: s.v_max, a_max: s.a_max, laps: s.laps })
                .collect();
            let flight = Figure8Flight::new(
                f8.amplitude_x.unwrap_or(3.2),
                f8.amplitude_y.unwrap_or(1.6),
                f8.altitude.unwrap_or(1.2),
                &segments,
                f8.ramp_time.unwrap_or(3.0),
            )
            .map_err(|e| trajectory_error("scenario.figure8", e))?;
            let schedule = flight.mode_schedule();
            let start = flight.start_position();
            let end = flight.end_time();
            (TrajectorySpec::Figure8(flight), schedule, start, Some(end))
        }
        "attitude_profile" => {
            let rp = scenario.attitude_profile.as_ref();
            let d = AttitudeProfileSpec::default();
            let spec = AttitudeProfileSpec {
                rate: rp.and_then(|r| r.rate).unwrap_or(d.rate),
                max_angle: rp.and_then(|r| r.max_angle_deg).map(f64::to_radians).unwrap_or(d.max_angle),
                hold_duration: rp.and_then(|r| r.hold_duration).unwrap_or(d.hold_duration),
                total_duration: rp.and_then(|r| r.total_duration).unwrap_or(d.total_duration),
                axis: rp.and_then(|r| r.axis).map(Vec3::from).unwrap_or(d.axis),
            };
            spec.validate().map_err(|e| trajectory_error("scenario.attitude_profile", e))?;
            let total = spec.total_duration;
            (
                TrajectorySpec::AttitudeProfile(AttitudeProfileReference { position, spec }),
                ModeSchedule::constant(mode),
                position,
                Some(total),
            )
        }
        other => {
            return Err(invalid(
                "scenario.kind",
                format!("unknown kind `{other}` (expected hover, figure8 or attitude_profile)"),
            ))
        }
    };

    if let Some(entries) = &scenario.mode_schedule {
        let entries = entries.iter().map(|e| (e.t, e.mode)).collect();
        schedule = ModeSchedule::new(entries).map_err(|reason| invalid("scenario.mode_schedule", reason))?;
    }
    if raw.sim.duration.is_none() {
        if let Some(natural) = natural_duration {
            sim.duration = round_up_to(natural, sim.controller_period);
        }
    }
    sim.validate().map_err(|e| match e {
        SimError::Config { key, reason } => invalid(format!("sim.{key}"), reason),
        other => invalid("sim", other.to_string()),
    })?;

    Ok(ScenarioConfig {
        name: scenario.name.clone().unwrap_or_else(|| kind.clone()),
        vehicle,
        gains,
        sim,
        trajectory,
        schedule,
        initial_state: RigidBodyState::at_rest(start + offset),
        output: scenario.output.as_ref().map(PathBuf::from),
    })
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    parse_config(&read(path)?)
}

/// Reads only the `[vehicle]` table of a file; other tables are ignored.
pub fn load_vehicle_params(path: &Path) -> Result<VehicleParams, ConfigError> {
    parse_vehicle_params(&read(path)?)
}

pub fn parse_vehicle_params(text: &str) -> Result<VehicleParams, ConfigError> {
    let value: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let raw: RawVehicle = match value.get("vehicle") {
        Some(v) => v.clone().try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?,
        None => RawVehicle::default(),
    };
    vehicle_from_raw(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_names_first_required_key() {
        assert_eq!(parse_config(""), Err(ConfigError::Missing("scenario.kind".into())));
        assert_eq!(parse_config("[scenario]\nname = \"x\""), Err(ConfigError::Missing("scenario.kind".into())));
    }

    #[test]
    fn negative_mass_names_key() {
        let err = parse_config("[vehicle]\nmass = -1.0\n[scenario]\nkind = \"hover\"").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "vehicle.mass"), "{err}");
    }

    #[test]
    fn defaults_are_applied() {
        let cfg = parse_config("[scenario]\nkind = \"hover\"").unwrap();
        assert_eq!(cfg.vehicle, VehicleParams::default());
        assert_eq!(cfg.gains, ControllerGains::default());
        assert_eq!(cfg.sim, SimConfig::default());
        assert_eq!(cfg.initial_state.position, Vec3::new(0.0, 0.0, 1.2));
        assert_eq!(cfg.schedule.mode_at(0.0), ControlMode::FullyActuated);
    }

    #[test]
    fn gain_forms() {
        let text = r#"
            [gains]
            kp = 3.0
            kv = [1.0, 2.0, 3.0]
            kr = [[5.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 2.0]]
            [scenario]
            kind = "hover"
        "#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.gains.kp, Mat3::identity() * 3.0);
        assert_eq!(cfg.gains.kv, Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0)));
        assert_eq!(cfg.gains.kr[(2, 2)], 2.0);
        let err = parse_config("[gains]\nkv = -1.0\n[scenario]\nkind = \"hover\"").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "gains.kv"));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(parse_config("[scenario\nkind"), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("[vehicle]\nmas = 1.0\n[scenario]\nkind = \"hover\""), Err(ConfigError::Parse(_))));
        let err = parse_config("[scenario]\nkind = \"loop\"").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "scenario.kind"));
        let err = parse_config("[sim]\ncontroller_period = 0.0015\n[scenario]\nkind = \"hover\"").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "sim.controller_period"));
        let text = r#"
            [scenario]
            kind = "hover"
            mode_schedule = [{ t = 1.0, mode = "underactuated" }, { t = 0.5, mode = "fully_actuated" }]
        "#;
        let err = parse_config(text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "scenario.mode_schedule"));
        let text = "[scenario]\nkind = \"figure8\"\n[[scenario.figure8.segments]]\nmode = \"underactuated\"\nv_max = 0.0\na_max = 1.0";
        let err = parse_config(text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "scenario.figure8.v_max"), "{err}");
        assert!(matches!(load_config(Path::new("/nonexistent/x.toml")), Err(ConfigError::Io { .. })));
    }

    #[test]
    fn vehicle_only_file() {
        let p = parse_vehicle_params("[vehicle]\nk_cs = 0.5\n[scenario]\nkind = \"whatever\"").unwrap();
        assert_eq!(p.k_cs, 0.5);
        assert_eq!(parse_vehicle_params("").unwrap(), VehicleParams::default());
    }
}
