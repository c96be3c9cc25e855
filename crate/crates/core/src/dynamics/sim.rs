use serde::{Deserialize, Serialize};

use super::{step, RigidBodyState, SimError, TelemetryLog, TelemetryRecord};
use crate::actuation::{forward_wrench, ActuatorCommand, SaturationFlags, VehicleParams};
use crate::control::{ControlError, ControlMode};
use crate::so3::{project_to_so3, Rotation, Vec3};

/// Integration and control timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Physics step, s.
    pub dt: f64,
    /// Total simulated time, s.
    pub duration: f64,
    /// Controller update period, s. Must be an integer multiple of `dt`.
    pub controller_period: f64,
    /// Physics steps between SO(3) re-projections.
    pub renorm_interval: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, duration: 10.0, controller_period: 2e-3, renorm_interval: 100 }
    }
}

fn ratio_as_count(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let n = r.round();
    ((r - n).abs() <= 1e-6 * n.max(1.0)).then_some(n as usize)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |key, reason: &str| Err(SimError::Config { key, reason: reason.to_string() });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive");
        }
        if !(self.controller_period >= self.dt) {
            return bad("controller_period", "must be at least dt");
        }
        if ratio_as_count(self.controller_period, self.dt).is_none() {
            return bad("controller_period", "must be an integer multiple of dt");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration", "must be positive");
        }
        if ratio_as_count(self.duration, self.controller_period).is_none() {
            return bad("duration", "must be an integer multiple of controller_period");
        }
        if self.renorm_interval == 0 {
            return bad("renorm_interval", "must be at least 1");
        }
        Ok(())
    }

    pub fn steps_per_control(&self) -> usize {
        ratio_as_count(self.controller_period, self.dt).unwrap_or(1).max(1)
    }

    pub fn control_updates(&self) -> usize {
        ratio_as_count(self.duration, self.controller_period).unwrap_or(0)
    }
}

/// What a controller hands back to the simulator at each update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub command: ActuatorCommand,
    pub reference_position: Vec3,
    pub reference_attitude: Rotation,
    pub mode: ControlMode,
    pub saturation: SaturationFlags,
}

impl ControlOutput {
    /// A fixed command with no reference tracking.
    pub fn open_loop(command: ActuatorCommand, mode: ControlMode) -> Self {
        Self {
            command,
            reference_position: Vec3::zeros(),
            reference_attitude: Rotation::identity(),
            mode,
            saturation: SaturationFlags::default(),
        }
    }
}

/// A feedback law sampled at the controller rate.
pub trait Controller {
    /// `period` is the time until the next update.
    fn update(&mut self, t: f64, state: &RigidBodyState, period: f64) -> Result<ControlOutput, ControlError>;
}

impl<F> Controller for F
where
    F: FnMut(f64, &RigidBodyState, f64) -> Result<ControlOutput, ControlError>,
{
    fn update(&mut self, t: f64, state: &RigidBodyState, period: f64) -> Result<ControlOutput, ControlError> {
        self(t, state, period)
    }
}

/// A failed run together with everything logged before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct SimFailure {
    pub error: SimError,
    pub partial: TelemetryLog,
}

/// Closed-loop simulation with zero-order hold between controller updates.
///
/// The controller runs at `t = k·controller_period` for `k = 0..=N`, with
/// `N = duration / controller_period`; each update is logged together with
/// the state it saw. The last update is logged but never applied.
pub fn simulate<C: Controller + ?Sized>(
    initial: RigidBodyState,
    controller: &mut C,
    cfg: &SimConfig,
    p: &VehicleParams,
) -> Result<TelemetryLog, SimFailure> {
    let mut log = TelemetryLog::default();
    let fail = |error, log: TelemetryLog| SimFailure { error, partial: log };
    if let Err(e) = cfg.validate() {
        return Err(fail(e, log));
    }
    if let Err(e) = p.validate() {
        return Err(fail(SimError::Config { key: e.key, reason: e.reason }, log));
    }
    let substeps = cfg.steps_per_control();
    let updates = cfg.control_updates();
    log.records.reserve(updates + 1);

    let mut state = initial;
    let mut steps_since_projection = 0usize;
    for k in 0..=updates {
        let t = k as f64 * cfg.controller_period;
        let out = match controller.update(t, &state, cfg.controller_period) {
            Ok(out) => out,
            Err(source) => return Err(fail(SimError::Control { t, source }, log)),
        };
        if let Some(reason) = out.command.limit_violation(p) {
            return Err(fail(SimError::InvalidCommand { t, reason }, log));
        }
        let wrench = forward_wrench(&out.command, p);
        log.records.push(TelemetryRecord {
            t,
            state,
            reference_position: out.reference_position,
            reference_attitude: out.reference_attitude,
            command: out.command,
            wrench,
            mode: out.mode,
            saturation: out.saturation,
        });
        if k == updates {
            break;
        }
        for j in 0..substeps {
            let t_sub = t + j as f64 * cfg.dt;
            state = match step(&state, &wrench, p, cfg.dt) {
                Ok(s) => s,
                Err(_) => return Err(fail(SimError::Divergence { t: t_sub }, log)),
            };
            steps_since_projection += 1;
            if steps_since_projection >= cfg.renorm_interval {
                steps_since_projection = 0;
                state.attitude = match project_to_so3(state.attitude.matrix()) {
                    Ok(r) => r,
                    Err(source) => {
                        return Err(fail(SimError::AttitudeDrift { t: t_sub + cfg.dt, source }, log))
                    }
                };
            }
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::ActuatorCommand;

    fn hover(p: &VehicleParams) -> impl FnMut(f64, &RigidBodyState, f64) -> Result<ControlOutput, ControlError> {
        let cmd = ActuatorCommand::hover(p.hover_thrust());
        move |_, _, _| Ok(ControlOutput::open_loop(cmd, ControlMode::FullyActuated))
    }

    #[test]
    fn log_length_and_hover_drift() {
        let p = VehicleParams::default();
        let cfg = SimConfig { duration: 30.0, ..Default::default() };
        let log = simulate(RigidBodyState::default(), &mut hover(&p), &cfg, &p).unwrap();
        assert_eq!(log.records.len(), 15_001);
        assert_eq!(log.records.last().unwrap().t, 30.0);
        let drift = log.records.iter().map(|r| r.state.position.norm()).fold(0.0, f64::max);
        assert!(drift < 1e-3, "{drift}");
    }

    #[test]
    fn invalid_command_halts_at_first_bad_update() {
        let p = VehicleParams::default();
        let cfg = SimConfig { duration: 1.0, ..Default::default() };
        let mut ctrl = |t: f64, _: &RigidBodyState, _: f64| {
            let f = if t >= 0.5 { -1.0 } else { 4.67 };
            Ok(ControlOutput::open_loop(
                ActuatorCommand { f1: f, f2: 4.67, ..Default::default() },
                ControlMode::FullyActuated,
            ))
        };
        let err = simulate(RigidBodyState::default(), &mut ctrl, &cfg, &p).unwrap_err();
        assert!(matches!(err.error, SimError::InvalidCommand { t, .. } if (t - 0.5).abs() < 1e-12));
        assert!(err.error.is_allocation_failure());
        assert_eq!(err.partial.records.len(), 250);
    }

    #[test]
    fn controller_error_carries_timestamp() {
        let p = VehicleParams::default();
        let cfg = SimConfig { duration: 1.0, ..Default::default() };
        let mut ctrl = |t: f64, _: &RigidBodyState, _: f64| {
            if t > 0.101 {
                Err(ControlError::ReferenceSingularity)
            } else {
                Ok(ControlOutput::open_loop(ActuatorCommand::hover(9.339), ControlMode::Underactuated))
            }
        };
        let err = simulate(RigidBodyState::default(), &mut ctrl, &cfg, &p).unwrap_err();
        assert!((err.error.time().unwrap() - 0.102).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::default();
        assert!(ok.validate().is_ok());
        assert_eq!(ok.steps_per_control(), 2);
        let bad = SimConfig { controller_period: 1.5e-3, ..ok };
        assert!(matches!(bad.validate(), Err(SimError::Config { key: "controller_period", .. })));
        let bad = SimConfig { dt: 3e-3, ..ok };
        assert!(bad.validate().is_err());
        let bad = SimConfig { renorm_interval: 0, ..ok };
        assert!(matches!(bad.validate(), Err(SimError::Config { key: "renorm_interval", .. })));
    }
}
