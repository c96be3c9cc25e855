//! Hierarchical flight controller.
//!
//! A cascaded PD position loop produces a desired acceleration. In
//! fully-actuated mode the whole force vector is requested in the body frame
//! and the attitude reference is free; in underactuated mode only the
//! collective thrust along body z is requested and the attitude reference
//! follows the thrust direction (differential flatness). A cascaded PID loop
//! on SO(3) turns the attitude reference into torques, and the wrench is
//! allocated to the six actuators.

use serde::{Deserialize, Serialize};

use crate::actuation::{allocate, ActuatorCommand, AllocationError, BodyWrench, SaturationFlags, VehicleParams};
use crate::dynamics::{ControlOutput, Controller, RigidBodyState};
use crate::so3::{vee, Mat3, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    FullyActuated,
    Underactuated,
}

impl ControlMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlMode::FullyActuated => "fully_actuated",
            ControlMode::Underactuated => "underactuated",
        }
    }
}

impl std::fmt::Display for ControlMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub kp: Mat3,
    pub kv: Mat3,
    pub kr: Mat3,
    pub kp_w: Mat3,
    pub ki_w: Mat3,
    pub kd_w: Mat3,
    /// Bound on the integral torque contribution, N·m per axis.
    pub integral_limit: Vec3,
    /// Cutoff of the low-pass filter on the rate-error derivative, Hz.
    pub derivative_cutoff_hz: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        let diag = |x: f64, y: f64, z: f64| Mat3::from_diagonal(&Vec3::new(x, y, z));
        Self {
            kp: Mat3::identity() * 2.5,
            kv: Mat3::identity() * 3.5,
            kr: diag(20.0, 20.0, 8.0),
            kp_w: diag(0.25, 0.25, 0.10),
            ki_w: diag(0.02, 0.02, 0.01),
            kd_w: diag(0.002, 0.002, 0.001),
            integral_limit: Vec3::new(0.1, 0.1, 0.05),
            derivative_cutoff_hz: 50.0,
        }
    }
}

impl ControllerGains {
    /// Name of the first gain that is not positive definite, if any.
    pub fn validate(&self) -> Result<(), &'static str> {
        let spd = |m: &Mat3| (m - m.transpose()).amax() <= 1e-12 && m.cholesky().is_some();
        for (name, m) in [
            ("kp", &self.kp),
            ("kv", &self.kv),
            ("kr", &self.kr),
            ("kp_w", &self.kp_w),
            ("ki_w", &self.ki_w),
            ("kd_w", &self.kd_w),
        ] {
            if !spd(m) {
                return Err(name);
            }
        }
        if !self.integral_limit.iter().all(|&x| x > 0.0) {
            return Err("integral_limit");
        }
        if !(self.derivative_cutoff_hz > 0.0) {
            return Err("derivative_cutoff_hz");
        }
        Ok(())
    }
}

/// Reference for one control update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub yaw: f64,
    /// Attitude reference; required in fully-actuated mode.
    pub attitude: Option<Rotation>,
}

impl TrajectorySample {
    /// Stationary reference at `position` with attitude `attitude`.
    pub fn hover(position: Vec3, attitude: Rotation) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            yaw: attitude.to_euler().2,
            attitude: Some(attitude),
        }
    }
}

/// Memory of the body-rate PID loop.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AttitudeLoopState {
    /// Trapezoidal integral of the rate error, rad.
    pub integral: Vec3,
    /// Rate error at the previous update; `None` before the first update.
    pub previous_error: Option<Vec3>,
    /// Low-pass filtered rate-error derivative, rad/s².
    pub derivative: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error("thrust direction undefined for the requested acceleration")]
    ReferenceSingularity,
    #[error("fully-actuated mode needs an attitude reference")]
    MissingAttitudeReference,
}

/// Cascaded PD position law.
pub fn desired_acceleration(r: &TrajectorySample, s: &RigidBodyState, g: &ControllerGains) -> Vec3 {
    r.acceleration + g.kv * (r.velocity + g.kp * (r.position - s.position) - s.velocity)
}

/// Body-frame force that realizes `a_d` at attitude `attitude`.
pub fn desired_thrust_fa(a_d: &Vec3, attitude: &Rotation, p: &VehicleParams) -> Vec3 {
    attitude.transpose().apply(&(p.mass * (a_d - p.gravity())))
}

/// Projection of the required force on the current body z-axis.
pub fn desired_collective_thrust_ua(a_d: &Vec3, attitude: &Rotation, p: &VehicleParams) -> f64 {
    (p.mass * (a_d - p.gravity())).dot(&attitude.body_z())
}

/// Attitude whose z-axis points along the required thrust, with heading
/// `yaw` projected onto the plane normal to it.
pub fn flatness_reference_attitude(a_d: &Vec3, yaw: f64, p: &VehicleParams) -> Result<Rotation, ControlError> {
    let thrust = a_d - p.gravity();
    let norm = thrust.norm();
    if !(norm > 0.1 * p.g) {
        return Err(ControlError::ReferenceSingularity);
    }
    let z_b = thrust / norm;
    let x_c = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let y_raw = z_b.cross(&x_c);
    let y_norm = y_raw.norm();
    if !(y_norm > 1e-6) {
        return Err(ControlError::ReferenceSingularity);
    }
    let y_b = y_raw / y_norm;
    let x_b = y_b.cross(&z_b);
    Ok(Rotation::from_matrix_unchecked(Mat3::from_columns(&[x_b, y_b, z_b])))
}

/// `½ (R_rᵀR − RᵀR_r)∨`: how far `attitude` is rotated past `reference`,
/// in the body frame.
pub fn attitude_error(reference: &Rotation, attitude: &Rotation) -> Vec3 {
    let rr = reference.matrix();
    let r = attitude.matrix();
    let m = (rr.transpose() * r - r.transpose() * rr) * 0.5;
    // skew by construction
    vee(&m).unwrap_or_else(|_| Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

pub fn desired_bodyrate(attitude_err: &Vec3, g: &ControllerGains) -> Vec3 {
    g.kr * attitude_err
}

/// Body-rate PID. The integral uses trapezoidal accumulation clamped so that
/// `K_I·∫` stays within `integral_limit`; the derivative is a first-order
/// low-pass of the finite difference. The first update after a reset has no
/// derivative term.
pub fn desired_torque(
    omega_d: &Vec3,
    omega: &Vec3,
    state: &AttitudeLoopState,
    g: &ControllerGains,
    dt: f64,
) -> (Vec3, AttitudeLoopState) {
    let err = omega_d - omega;
    let (integral, derivative) = match state.previous_error {
        None => (state.integral, Vec3::zeros()),
        Some(prev) => {
            let raw = (err - prev) / dt;
            let tau = 1.0 / (2.0 * std::f64::consts::PI * g.derivative_cutoff_hz);
            let alpha = dt / (dt + tau);
            (state.integral + (err + prev) * (0.5 * dt), state.derivative + (raw - state.derivative) * alpha)
        }
    };
    let integral = Vec3::from_fn(|i, _| {
        let ki = g.ki_w[(i, i)];
        if ki > 0.0 {
            let bound = g.integral_limit[i] / ki;
            integral[i].clamp(-bound, bound)
        } else {
            integral[i]
        }
    });
    let torque = g.kp_w * err + g.ki_w * integral + g.kd_w * derivative;
    (torque, AttitudeLoopState { integral, previous_error: Some(err), derivative })
}

/// Everything one pass through the control pipeline produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStep {
    pub command: ActuatorCommand,
    pub loop_state: AttitudeLoopState,
    /// Wrench handed to the allocator, before saturation.
    pub requested: BodyWrench,
    pub reference_attitude: Rotation,
    pub saturation: SaturationFlags,
}

/// Position loop → thrust (mode-dependent) → attitude error → body-rate
/// command → torque → allocation.
pub fn control_step(
    r: &TrajectorySample,
    s: &RigidBodyState,
    mode: ControlMode,
    loop_state: &AttitudeLoopState,
    g: &ControllerGains,
    p: &VehicleParams,
    dt: f64,
) -> Result<ControlStep, ControlError> {
    let a_d = desired_acceleration(r, s, g);
    let (force, reference_attitude) = match mode {
        ControlMode::FullyActuated => {
            let att = r.attitude.ok_or(ControlError::MissingAttitudeReference)?;
            (desired_thrust_fa(&a_d, &s.attitude, p), att)
        }
        ControlMode::Underactuated => {
            let att = flatness_reference_attitude(&a_d, r.yaw, p)?;
            (Vec3::new(0.0, 0.0, desired_collective_thrust_ua(&a_d, &s.attitude, p)), att)
        }
    };
    // The rate command must oppose the amount by which R leads R_r.
    let err = -attitude_error(&reference_attitude, &s.attitude);
    let omega_d = desired_bodyrate(&err, g);
    let (torque, loop_state) = desired_torque(&omega_d, &s.omega, loop_state, g, dt);
    let requested = BodyWrench::new(force, torque);
    let (command, saturation) = allocate(&requested, p)?;
    Ok(ControlStep { command, loop_state, requested, reference_attitude, saturation })
}

/// Anything that can be sampled for a reference at time `t`.
pub trait Reference {
    fn sample(&self, t: f64) -> TrajectorySample;
}

impl Reference for TrajectorySample {
    fn sample(&self, _t: f64) -> TrajectorySample {
        *self
    }
}

impl<F: Fn(f64) -> TrajectorySample> Reference for F {
    fn sample(&self, t: f64) -> TrajectorySample {
        self(t)
    }
}

/// Piecewise-constant mode schedule: `(t_start, mode)` with strictly
/// increasing start times. Before the first entry the first mode applies.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSchedule(Vec<(f64, ControlMode)>);

impl ModeSchedule {
    pub fn new(entries: Vec<(f64, ControlMode)>) -> Result<Self, String> {
        if entries.is_empty() {
            return Err("mode schedule is empty".into());
        }
        if entries.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err("mode schedule times must be strictly increasing".into());
        }
        Ok(Self(entries))
    }

    pub fn constant(mode: ControlMode) -> Self {
        Self(vec![(0.0, mode)])
    }

    pub fn mode_at(&self, t: f64) -> ControlMode {
        self.0.iter().rev().find(|(start, _)| t >= *start).unwrap_or(&self.0[0]).1
    }

    pub fn entries(&self) -> &[(f64, ControlMode)] {
        &self.0
    }

    /// Start times of every entry after the first whose mode differs from
    /// its predecessor.
    pub fn switch_times(&self) -> Vec<f64> {
        self.0.windows(2).filter(|w| w[0].1 != w[1].1).map(|w| w[1].0).collect()
    }
}

/// Stateful wrapper around [`control_step`] that follows a reference and a
/// mode schedule.
///
/// The loop state is reset whenever the mode changes. After an allocation
/// failure the previous command is held for one update; a second
/// consecutive failure is returned as an error.
pub struct FlightController<R> {
    pub reference: R,
    pub schedule: ModeSchedule,
    pub gains: ControllerGains,
    pub params: VehicleParams,
    loop_state: AttitudeLoopState,
    mode: Option<ControlMode>,
    last_command: Option<ActuatorCommand>,
    holding: bool,
}

impl<R: Reference> FlightController<R> {
    pub fn new(reference: R, schedule: ModeSchedule, gains: ControllerGains, params: VehicleParams) -> Self {
        Self {
            reference,
            schedule,
            gains,
            params,
            loop_state: AttitudeLoopState::default(),
            mode: None,
            last_command: None,
            holding: false,
        }
    }

    pub fn loop_state(&self) -> &AttitudeLoopState {
        &self.loop_state
    }
}

impl<R: Reference> Controller for FlightController<R> {
    fn update(&mut self, t: f64, state: &RigidBodyState, period: f64) -> Result<ControlOutput, ControlError> {
        let mode = self.schedule.mode_at(t);
        if self.mode.is_some_and(|m| m != mode) {
            self.loop_state = AttitudeLoopState::default();
        }
        self.mode = Some(mode);
        let r = self.reference.sample(t);
        match control_step(&r, state, mode, &self.loop_state, &self.gains, &self.params, period) {
            Ok(out) => {
                self.loop_state = out.loop_state;
                self.last_command = Some(out.command);
                self.holding = false;
                Ok(ControlOutput {
                    command: out.command,
                    reference_position: r.position,
                    reference_attitude: out.reference_attitude,
                    mode,
                    saturation: out.saturation,
                })
            }
            Err(ControlError::Allocation(e)) => match self.last_command {
                Some(cmd) if !self.holding => {
                    self.holding = true;
                    Ok(ControlOutput {
                        command: cmd,
                        reference_position: r.position,
                        reference_attitude: r.attitude.unwrap_or_default(),
                        mode,
                        saturation: SaturationFlags::default(),
                    })
                }
                _ => Err(ControlError::Allocation(e)),
            },
            Err(e) => Err(e),
        }
    }
}
