use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::{ScenarioConfig, TrajectorySpec};
use super::metrics::rms;
use crate::control::{FlightController, Reference, TrajectorySample};
use crate::dynamics::{simulate, SimError, TelemetryLog, TelemetryRecord};

/// Window after a mode switch over which the command jump is measured, s.
pub const SWITCH_WINDOW: f64 = 0.5;

impl Reference for TrajectorySpec {
    fn sample(&self, t: f64) -> TrajectorySample {
        match self {
            TrajectorySpec::Hover(s) => *s,
            TrajectorySpec::Figure8(f) => f.sample(t),
            TrajectorySpec::AttitudeProfile(a) => a.sample(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureReport {
    pub t: Option<f64>,
    pub kind: &'static str,
    pub message: String,
}

impl FailureReport {
    fn from_error(e: &SimError) -> Self {
        let kind = match e {
            SimError::Config { .. } => "config",
            e if e.is_allocation_failure() => "allocation",
            SimError::Control { .. } => "control",
            _ => "divergence",
        };
        Self { t: e.time(), kind, message: e.to_string() }
    }
}

/// Summary of one run. Metrics cover whatever was logged, so a failed run
/// still reports the samples before the failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub samples: usize,
    pub duration_s: f64,
    pub position_rmse_m: f64,
    pub position_rmse_by_mode_m: BTreeMap<String, f64>,
    pub max_position_error_m: f64,
    pub attitude_rmse_deg: f64,
    pub max_attitude_error_deg: f64,
    pub max_tilt_deg_by_mode: BTreeMap<String, f64>,
    /// Number of updates at which saturation started (rising edges).
    pub saturation_events: usize,
    pub mode_switch_times: Vec<f64>,
    /// Largest change in a rotor thrust between consecutive updates shortly
    /// after a mode switch, N.
    pub max_switch_thrust_jump_n: f64,
    pub failure: Option<FailureReport>,
}

impl ScenarioReport {
    pub fn from_log(name: &str, log: &TelemetryLog, failure: Option<&SimError>) -> Self {
        let r = &log.records;
        let pos_err: Vec<f64> = r.iter().map(TelemetryRecord::position_error).collect();
        let att_err: Vec<f64> = r.iter().map(|x| x.attitude_error().to_degrees()).collect();

        let mut by_mode: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut tilt: BTreeMap<String, f64> = BTreeMap::new();
        for rec in r {
            let key = rec.mode.as_str().to_string();
            by_mode.entry(key.clone()).or_default().push(rec.position_error());
            let t = tilt.entry(key).or_insert(0.0);
            *t = t.max(rec.state.attitude.tilt().to_degrees());
        }

        let mut saturation_events = 0;
        let mut saturated = false;
        for rec in r {
            let now = rec.saturation.any();
            if now && !saturated {
                saturation_events += 1;
            }
            saturated = now;
        }

        let mut switches = Vec::new();
        let mut jump: f64 = 0.0;
        for (i, pair) in r.windows(2).enumerate() {
            if pair[0].mode != pair[1].mode {
                switches.push(pair[1].t);
                let end = pair[1].t + SWITCH_WINDOW;
                for w in r[i..].windows(2).take_while(|w| w[1].t <= end + 1e-9) {
                    jump = jump
                        .max((w[1].command.f1 - w[0].command.f1).abs())
                        .max((w[1].command.f2 - w[0].command.f2).abs());
                }
            }
        }

        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        Self {
            scenario: name.to_string(),
            samples: r.len(),
            duration_s: r.last().map_or(0.0, |x| x.t),
            position_rmse_m: rms(&pos_err).unwrap_or(f64::NAN),
            position_rmse_by_mode_m: by_mode.into_iter().map(|(k, v)| (k, rms(&v).unwrap_or(f64::NAN))).collect(),
            max_position_error_m: max(&pos_err),
            attitude_rmse_deg: rms(&att_err).unwrap_or(f64::NAN),
            max_attitude_error_deg: max(&att_err),
            max_tilt_deg_by_mode: tilt,
            saturation_events,
            mode_switch_times: switches,
            max_switch_thrust_jump_n: jump,
            failure: failure.map(FailureReport::from_error),
        }
    }
}

/// A finished run; `error` is set when the simulation stopped early.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub log: TelemetryLog,
    pub error: Option<SimError>,
}

/// Runs the closed loop for `cfg` and, when `cfg.output` is set, writes the
/// telemetry CSV there (also for failed runs).
pub fn run_scenario(cfg: &ScenarioConfig) -> std::io::Result<ScenarioOutcome> {
    let outcome = simulate_scenario(cfg);
    if let Some(path) = &cfg.output {
        write_log(&outcome.log, path)?;
    }
    Ok(outcome)
}

/// [`run_scenario`] without any file output.
pub fn simulate_scenario(cfg: &ScenarioConfig) -> ScenarioOutcome {
    let mut controller = FlightController::new(cfg.trajectory.clone(), cfg.schedule.clone(), cfg.gains, cfg.vehicle);
    let (log, error) = match simulate(cfg.initial_state, &mut controller, &cfg.sim, &cfg.vehicle) {
        Ok(log) => (log, None),
        Err(f) => (f.partial, Some(f.error)),
    };
    let report = ScenarioReport::from_log(&cfg.name, &log, error.as_ref());
    ScenarioOutcome { report, log, error }
}

fn write_log(log: &TelemetryLog, path: &Path) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    log.write_csv_file(path)
}
