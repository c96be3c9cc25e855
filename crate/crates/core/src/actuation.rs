//! Actuator model and control allocation.
//!
//! The vehicle has two coaxial rotors (thrusts `f1` upper, `f2` lower) and
//! four control surfaces sitting in the rotor downwash, mounted at 45° to the
//! body axes. The upper pair (`theta1`, `delta1`) only sees the upper rotor's
//! wake, the lower pair (`theta2`, `delta2`) sees both. Surface lift is
//! linear in deflection and in the thrust of the wake feeding it:
//!
//! ```text
//! F_cs1 = K_cs · f1 · angle        F_cs2 = K_cs · (f1 + f2) · angle
//! ```
//!
//! [`forward_wrench`] maps a command to the body wrench, [`mix`] is its
//! closed-form inverse and [`allocate`] wraps [`mix`] with prioritized
//! saturation for use inside the control loop.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::so3::{Mat3, Vec3};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Physical parameters of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Body-frame inertia, kg·m².
    pub inertia: Mat3,
    /// Upper control-surface lever arm to the CoM, m.
    pub l1: f64,
    /// Lower control-surface lever arm to the CoM, m.
    pub l2: f64,
    /// `S·C_l / A`, lift per unit thrust per radian of deflection.
    pub k_cs: f64,
    /// Rotor torque-to-thrust ratio `k_M / k_F`, m.
    pub km_over_kf: f64,
    /// Control-surface deflection limit, rad.
    pub angle_max: f64,
    /// Per-rotor thrust limit, N.
    pub f_max: f64,
    /// Smallest upper-rotor thrust for which allocation is attempted, N.
    pub f1_min: f64,
    pub rho: f64,
    /// Magnitude of gravitational acceleration, m/s².
    pub g: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 0.952,
            inertia: Mat3::from_diagonal(&Vec3::new(8e-3, 8e-3, 4e-3)),
            l1: 0.10,
            l2: 0.10,
            k_cs: 1.0,
            km_over_kf: 0.015,
            angle_max: 25f64.to_radians(),
            f_max: 12.0,
            f1_min: 0.5,
            rho: 1.225,
            g: 9.81,
        }
    }
}

/// A parameter that failed validation, named by its field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("`{key}` {reason}")]
pub struct InvalidParam {
    pub key: &'static str,
    pub reason: String,
}

impl VehicleParams {
    /// Gravity vector in the inertial frame (z up).
    pub fn gravity(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.g)
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.g
    }

    pub fn validate(&self) -> Result<(), InvalidParam> {
        let positive = [
            ("mass", self.mass),
            ("l1", self.l1),
            ("l2", self.l2),
            ("k_cs", self.k_cs),
            ("km_over_kf", self.km_over_kf),
            ("angle_max", self.angle_max),
            ("f_max", self.f_max),
            ("f1_min", self.f1_min),
            ("rho", self.rho),
            ("g", self.g),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(InvalidParam { key, reason: format!("must be positive, got {value}") });
            }
        }
        let j = &self.inertia;
        if (j - j.transpose()).amax() > 1e-12 * j.amax() || j.iter().any(|x| !x.is_finite()) {
            return Err(InvalidParam { key: "inertia", reason: "must be symmetric".into() });
        }
        if j.cholesky().is_none() {
            return Err(InvalidParam { key: "inertia", reason: "must be positive definite".into() });
        }
        if self.f1_min >= self.f_max {
            return Err(InvalidParam { key: "f1_min", reason: "must be below f_max".into() });
        }
        Ok(())
    }
}

/// The six actuator outputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    /// Upper rotor thrust, N.
    pub f1: f64,
    /// Lower rotor thrust, N.
    pub f2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl ActuatorCommand {
    /// Both rotors sharing `thrust` equally, surfaces neutral.
    pub fn hover(thrust: f64) -> Self {
        Self { f1: 0.5 * thrust, f2: 0.5 * thrust, ..Default::default() }
    }

    pub fn angles(&self) -> [f64; 4] {
        [self.theta1, self.theta2, self.delta1, self.delta2]
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.f1, self.f2, self.theta1, self.theta2, self.delta1, self.delta2]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }

    /// Maps a point of the unit cube `[0, 1]⁶` onto the feasible command box
    /// (`f1 ≥ f1_min`, thrusts up to `f_max`, deflections within `±angle_max`).
    /// Uniform inputs give uniformly distributed feasible commands.
    pub fn from_unit_cube(p: &VehicleParams, u: [f64; 6]) -> Self {
        let angle = |x: f64| (2.0 * x - 1.0) * p.angle_max;
        Self {
            f1: p.f1_min + u[0] * (p.f_max - p.f1_min),
            f2: u[1] * p.f_max,
            theta1: angle(u[2]),
            theta2: angle(u[3]),
            delta1: angle(u[4]),
            delta2: angle(u[5]),
        }
    }

    /// `None` if the command respects thrust and deflection limits,
    /// otherwise a description of the first violation.
    pub fn limit_violation(&self, p: &VehicleParams) -> Option<String> {
        if !self.is_finite() {
            return Some("non-finite actuator command".into());
        }
        for (name, f) in [("f1", self.f1), ("f2", self.f2)] {
            if f < 0.0 || f > p.f_max {
                return Some(format!("{name} = {f} N outside [0, {}]", p.f_max));
            }
        }
        let names = ["theta1", "theta2", "delta1", "delta2"];
        for (name, a) in names.iter().zip(self.angles()) {
            if a.abs() > p.angle_max * (1.0 + 1e-12) {
                return Some(format!("{name} = {a} rad beyond ±{}", p.angle_max));
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSurfaceLifts {
    pub cs1_theta: f64,
    pub cs2_theta: f64,
    pub cs1_delta: f64,
    pub cs2_delta: f64,
}

/// Body-frame force and torque.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BodyWrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl BodyWrench {
    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Self { force, torque }
    }

    pub fn max_abs_diff(&self, other: &BodyWrench) -> f64 {
        (self.force - other.force).amax().max((self.torque - other.torque).amax())
    }
}

pub fn control_surface_lifts(u: &ActuatorCommand, p: &VehicleParams) -> ControlSurfaceLifts {
    let upper = p.k_cs * u.f1;
    let lower = p.k_cs * (u.f1 + u.f2);
    ControlSurfaceLifts {
        cs1_theta: upper * u.theta1,
        cs2_theta: lower * u.theta2,
        cs1_delta: upper * u.delta1,
        cs2_delta: lower * u.delta2,
    }
}

pub fn forward_wrench(u: &ActuatorCommand, p: &VehicleParams) -> BodyWrench {
    let l = control_surface_lifts(u, p);
    let s = FRAC_1_SQRT_2;
    let force = Vec3::new(
        s * (-l.cs1_theta - l.cs2_theta + l.cs1_delta + l.cs2_delta),
        s * (l.cs1_theta + l.cs2_theta + l.cs1_delta + l.cs2_delta),
        u.f1 + u.f2,
    );
    let torque = Vec3::new(
        s * (-(l.cs1_theta + l.cs1_delta) * p.l1 + (l.cs2_theta + l.cs2_delta) * p.l2),
        s * ((-l.cs1_theta + l.cs1_delta) * p.l1 - (-l.cs2_theta + l.cs2_delta) * p.l2),
        p.km_over_kf * (u.f1 - u.f2),
    );
    BodyWrench { force, torque }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AllocationError {
    #[error("collective thrust {t_z:.4} N is not positive; allocation is singular")]
    NonPositiveThrust { t_z: f64 },
    #[error("upper rotor thrust {f1:.4} N below mixing minimum {f1_min} N; allocation is singular")]
    UpperRotorBelowMinimum { f1: f64, f1_min: f64 },
    #[error("non-finite wrench request")]
    NonFinite,
}

/// Rotor thrusts for a collective thrust and yaw torque.
fn rotor_split(t_z: f64, tau_z: f64, p: &VehicleParams) -> (f64, f64) {
    let d = tau_z / p.km_over_kf;
    (0.5 * (t_z + d), 0.5 * (t_z - d))
}

/// Deflections for a lateral force and roll/pitch torque request, given the
/// thrusts `f1` and `t_z = f1 + f2` feeding the two surface pairs.
fn surface_angles(force: (f64, f64), torque: (f64, f64), f1: f64, t_z: f64, p: &VehicleParams) -> [f64; 4] {
    let (fx, fy) = force;
    let (mx, my) = torque;
    let span = p.k_cs * (p.l1 + p.l2);
    // 2·f1 = T_z + (k_F/k_M)·τ_z
    let upper = SQRT_2 / (span * 2.0 * f1);
    let lower = SQRT_2 / (2.0 * span * t_z);
    [
        upper * (-fx * p.l2 + fy * p.l2 - mx - my),
        lower * (-fx * p.l1 + fy * p.l1 + mx + my),
        upper * (fx * p.l2 + fy * p.l2 - mx + my),
        lower * (fx * p.l1 + fy * p.l1 + mx - my),
    ]
}

/// Closed-form inverse of [`forward_wrench`].
///
/// Deflections are returned unclamped; pass the result through [`saturate`]
/// (or use [`allocate`]) before sending it to hardware.
pub fn mix(w: &BodyWrench, p: &VehicleParams) -> Result<ActuatorCommand, AllocationError> {
    if !(w.force.iter().chain(w.torque.iter()).all(|x| x.is_finite())) {
        return Err(AllocationError::NonFinite);
    }
    let t_z = w.force.z;
    if t_z <= 0.0 {
        return Err(AllocationError::NonPositiveThrust { t_z });
    }
    let (f1, f2) = rotor_split(t_z, w.torque.z, p);
    if f1 < p.f1_min {
        return Err(AllocationError::UpperRotorBelowMinimum { f1, f1_min: p.f1_min });
    }
    let [theta1, theta2, delta1, delta2] =
        surface_angles((w.force.x, w.force.y), (w.torque.x, w.torque.y), f1, t_z, p);
    Ok(ActuatorCommand { f1, f2, theta1, theta2, delta1, delta2 })
}

/// Which limits were hit while producing a command.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SaturationFlags {
    pub f1: bool,
    pub f2: bool,
    pub theta1: bool,
    pub theta2: bool,
    pub delta1: bool,
    pub delta2: bool,
    /// Collective thrust request reduced to the rotor limit.
    pub collective: bool,
    /// Yaw torque reduced to keep both rotors in range.
    pub yaw_torque: bool,
    /// Lateral body force scaled down to fit the deflection limits.
    pub lateral_force: bool,
    /// Roll/pitch torque scaled down to fit the deflection limits.
    pub tilt_torque: bool,
}

impl SaturationFlags {
    pub fn any(&self) -> bool {
        self.f1
            || self.f2
            || self.theta1
            || self.theta2
            || self.delta1
            || self.delta2
            || self.collective
            || self.yaw_torque
            || self.lateral_force
            || self.tilt_torque
    }

    fn merge(self, o: SaturationFlags) -> SaturationFlags {
        SaturationFlags {
            f1: self.f1 || o.f1,
            f2: self.f2 || o.f2,
            theta1: self.theta1 || o.theta1,
            theta2: self.theta2 || o.theta2,
            delta1: self.delta1 || o.delta1,
            delta2: self.delta2 || o.delta2,
            collective: self.collective || o.collective,
            yaw_torque: self.yaw_torque || o.yaw_torque,
            lateral_force: self.lateral_force || o.lateral_force,
            tilt_torque: self.tilt_torque || o.tilt_torque,
        }
    }
}

fn clamp_flag(x: f64, lo: f64, hi: f64, flag: &mut bool) -> f64 {
    if x < lo {
        *flag = true;
        lo
    } else if x > hi {
        *flag = true;
        hi
    } else {
        x
    }
}

/// Clamps thrusts to `[0, f_max]` and deflections to `±angle_max`.
pub fn saturate(u: &ActuatorCommand, p: &VehicleParams) -> (ActuatorCommand, SaturationFlags) {
    let mut flags = SaturationFlags::default();
    let a = p.angle_max;
    let out = ActuatorCommand {
        f1: clamp_flag(u.f1, 0.0, p.f_max, &mut flags.f1),
        f2: clamp_flag(u.f2, 0.0, p.f_max, &mut flags.f2),
        theta1: clamp_flag(u.theta1, -a, a, &mut flags.theta1),
        theta2: clamp_flag(u.theta2, -a, a, &mut flags.theta2),
        delta1: clamp_flag(u.delta1, -a, a, &mut flags.delta1),
        delta2: clamp_flag(u.delta2, -a, a, &mut flags.delta2),
    };
    (out, flags)
}

/// Largest `s ∈ [0, 1]` with `|base_i + s·dir_i| ≤ limit` for every `i`,
/// assuming `|base_i| ≤ limit`.
fn max_feasible_scale(base: &[f64; 4], dir: &[f64; 4], limit: f64) -> f64 {
    base.iter().zip(dir).fold(1.0f64, |s, (&b, &d)| {
        if d > 0.0 {
            s.min((limit - b) / d)
        } else if d < 0.0 {
            s.min((limit + b) / -d)
        } else {
            s
        }
    })
    .max(0.0)
}

/// [`mix`] with prioritized saturation.
///
/// Rotor authority is preserved first: the collective thrust is capped at
/// `2·f_max`, then the yaw torque is reduced until both rotors fit. With the
/// rotor thrusts fixed the deflections are linear in the lateral force and
/// in the roll/pitch torque. A request whose deflections fit is passed
/// through unchanged; otherwise the lateral force is scaled down before the
/// torque is. Only a collective thrust below `f1_min` is singular, since no
/// yaw torque can then lift the upper rotor to its minimum.
pub fn allocate(
    w: &BodyWrench,
    p: &VehicleParams,
) -> Result<(ActuatorCommand, SaturationFlags), AllocationError> {
    if !(w.force.iter().chain(w.torque.iter()).all(|x| x.is_finite())) {
        return Err(AllocationError::NonFinite);
    }
    let mut flags = SaturationFlags::default();
    let mut t_z = w.force.z;
    if t_z <= 0.0 {
        return Err(AllocationError::NonPositiveThrust { t_z });
    }
    // even with the whole thrust on the upper rotor
    if t_z < p.f1_min {
        return Err(AllocationError::UpperRotorBelowMinimum { f1: t_z, f1_min: p.f1_min });
    }
    if t_z > 2.0 * p.f_max {
        t_z = 2.0 * p.f_max;
        flags.collective = true;
    }
    // f1 ∈ [f1_min, f_max], f2 ∈ [0, f_max]  ⇔  bounds on d = τ_z·k_F/k_M
    let d_lo = (2.0 * p.f1_min - t_z).max(t_z - 2.0 * p.f_max);
    let d_hi = (2.0 * p.f_max - t_z).min(t_z);
    let d = clamp_flag(w.torque.z / p.km_over_kf, d_lo, d_hi, &mut flags.yaw_torque);
    let (f1, f2) = (0.5 * (t_z + d), 0.5 * (t_z - d));

    let force = (w.force.x, w.force.y);
    let torque = (w.torque.x, w.torque.y);
    let from_force = surface_angles(force, (0.0, 0.0), f1, t_z, p);
    let from_torque = surface_angles((0.0, 0.0), torque, f1, t_z, p);
    let limit = p.angle_max;
    let total: [f64; 4] = std::array::from_fn(|i| from_torque[i] + from_force[i]);
    let torque_scale = if max_feasible_scale(&[0.0; 4], &total, limit) >= 1.0 {
        1.0
    } else {
        max_feasible_scale(&[0.0; 4], &from_torque, limit)
    };
    let force_scale = if torque_scale < 1.0 {
        flags.tilt_torque = true;
        0.0
    } else {
        max_feasible_scale(&from_torque, &from_force, limit)
    };
    if force_scale < 1.0 && (force.0 != 0.0 || force.1 != 0.0) {
        flags.lateral_force = true;
    }
    let angles: [f64; 4] =
        std::array::from_fn(|i| torque_scale * from_torque[i] + force_scale * from_force[i]);
    let raw = ActuatorCommand {
        f1,
        f2,
        theta1: angles[0],
        theta2: angles[1],
        delta1: angles[2],
        delta2: angles[3],
    };
    let (cmd, clip) = saturate(&raw, p);
    Ok((cmd, flags.merge(clip)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    const HOVER: f64 = 0.952 * 9.81;

    #[test]
    fn lifts_examples() {
        let mut p = params();
        let zero = control_surface_lifts(&ActuatorCommand::hover(9.0), &p);
        assert_eq!(zero.cs1_theta + zero.cs2_theta + zero.cs1_delta + zero.cs2_delta, 0.0);

        p.k_cs = 2.0;
        let u = ActuatorCommand { f1: 4.0, f2: 0.0, theta1: 0.1, ..Default::default() };
        assert_relative_eq!(control_surface_lifts(&u, &p).cs1_theta, 0.8, epsilon = 1e-15);

        let u = ActuatorCommand { f1: 3.0, f2: 2.0, theta1: 0.1, theta2: -0.2, delta1: 0.05, delta2: 0.3 };
        let u2 = ActuatorCommand { f1: 6.0, f2: 4.0, ..u };
        let (a, b) = (control_surface_lifts(&u, &p), control_surface_lifts(&u2, &p));
        assert_relative_eq!(b.cs1_theta, 2.0 * a.cs1_theta);
        assert_relative_eq!(b.cs2_theta, 2.0 * a.cs2_theta);
        assert_relative_eq!(b.cs1_delta, 2.0 * a.cs1_delta);
        assert_relative_eq!(b.cs2_delta, 2.0 * a.cs2_delta);
    }

    #[test]
    fn lifts_linear_in_deflection() {
        let p = params();
        let u = ActuatorCommand { f1: 4.0, f2: 5.0, theta1: 0.1, theta2: 0.05, delta1: -0.1, delta2: 0.2 };
        let u3 = ActuatorCommand { theta1: 0.3, theta2: 0.15, delta1: -0.3, delta2: 0.6, ..u };
        let (a, b) = (control_surface_lifts(&u, &p), control_surface_lifts(&u3, &p));
        assert_relative_eq!(b.cs2_delta, 3.0 * a.cs2_delta, max_relative = 1e-12);
        assert_relative_eq!(b.cs1_delta, 3.0 * a.cs1_delta, max_relative = 1e-12);
    }

    #[test]
    fn forward_wrench_examples() {
        let p = params();
        let w = forward_wrench(&ActuatorCommand::hover(HOVER), &p);
        assert_eq!(w.force, Vec3::new(0.0, 0.0, HOVER));
        assert_eq!(w.torque, Vec3::zeros());

        let w = forward_wrench(&ActuatorCommand { f1: 5.0, f2: 4.0, ..Default::default() }, &p);
        assert_relative_eq!(w.torque.z, 0.015, epsilon = 1e-15);
        assert_eq!(w.force.z, 9.0);
    }

    #[test]
    fn opposed_deflections_give_pure_lateral_force() {
        // τ_y vanishes only when the two surface pairs' couples balance,
        // i.e. f1·l1 = (f1 + f2)·l2; here f2 = 0 and l1 = l2.
        let p = params();
        let a = 0.2;
        let u = ActuatorCommand { f1: 6.0, f2: 0.0, theta1: -a, theta2: -a, delta1: a, delta2: a };
        let w = forward_wrench(&u, &p);
        assert!(w.force.y.abs() < 1e-15);
        assert!(w.torque.x.abs() < 1e-15);
        assert!(w.torque.y.abs() < 1e-15);
        assert!(w.force.x > 0.0);
    }

    #[test]
    fn mix_examples() {
        let p = params();
        let u = mix(&BodyWrench::new(Vec3::new(0.0, 0.0, 9.339), Vec3::zeros()), &p).unwrap();
        assert_relative_eq!(u.f1, 4.6695, epsilon = 1e-12);
        assert_relative_eq!(u.f2, 4.6695, epsilon = 1e-12);
        assert_eq!(u.angles(), [0.0; 4]);

        let u = mix(&BodyWrench::new(Vec3::new(0.0, 0.0, 9.339), Vec3::new(0.0, 0.0, 0.03)), &p).unwrap();
        assert_relative_eq!(u.f1, 5.6695, epsilon = 1e-12);
        assert_relative_eq!(u.f2, 3.6695, epsilon = 1e-12);
        assert_eq!(u.angles(), [0.0; 4]);
    }

    #[test]
    fn mix_singularities() {
        let p = params();
        let down = BodyWrench::new(Vec3::new(0.0, 0.0, -1.0), Vec3::zeros());
        assert!(matches!(mix(&down, &p), Err(AllocationError::NonPositiveThrust { .. })));
        let weak = BodyWrench::new(Vec3::new(0.0, 0.0, 0.8), Vec3::zeros());
        assert!(matches!(mix(&weak, &p), Err(AllocationError::UpperRotorBelowMinimum { .. })));
        let yawing = BodyWrench::new(Vec3::new(0.0, 0.0, 9.0), Vec3::new(0.0, 0.0, -0.13));
        assert!(matches!(mix(&yawing, &p), Err(AllocationError::UpperRotorBelowMinimum { .. })));
        assert!(matches!(allocate(&down, &p), Err(AllocationError::NonPositiveThrust { .. })));
        // yaw authority is given up to keep the upper rotor at its minimum
        let (u, flags) = allocate(&weak, &p).unwrap();
        assert_relative_eq!(u.f1, p.f1_min, epsilon = 1e-15);
        assert!(flags.yaw_torque);
        let starved = BodyWrench::new(Vec3::new(0.0, 0.0, 0.3), Vec3::zeros());
        assert!(matches!(allocate(&starved, &p), Err(AllocationError::UpperRotorBelowMinimum { .. })));
    }

    #[test]
    fn saturate_examples() {
        let p = params();
        let u = ActuatorCommand { f1: 4.0, f2: 5.0, theta1: 0.1, theta2: -0.1, delta1: 0.0, delta2: 0.3 };
        assert_eq!(saturate(&u, &p), (u, SaturationFlags::default()));

        let (out, flags) = saturate(&ActuatorCommand { theta1: 2.0 * p.angle_max, ..u }, &p);
        assert_eq!(out.theta1, p.angle_max);
        assert!(flags.theta1 && flags.any());

        let (out, flags) = saturate(&ActuatorCommand { f2: -0.1, ..u }, &p);
        assert_eq!(out.f2, 0.0);
        assert!(flags.f2);
    }

    #[test]
    fn allocate_keeps_torque_over_lateral_force() {
        let p = params();
        let w = BodyWrench::new(Vec3::new(6.0, 0.0, HOVER), Vec3::new(0.02, -0.01, 0.0));
        let (u, flags) = allocate(&w, &p).unwrap();
        assert!(flags.lateral_force && !flags.tilt_torque);
        assert!(u.limit_violation(&p).is_none());
        let got = forward_wrench(&u, &p);
        assert!((got.torque - w.torque).amax() < 1e-12);
        assert!((got.force.z - w.force.z).abs() < 1e-12);
        assert!(got.force.x > 0.0 && got.force.x < 6.0);
        assert!(got.force.y.abs() < 1e-12);
    }

    #[test]
    fn allocate_limits_yaw_before_collective() {
        let p = params();
        let w = BodyWrench::new(Vec3::new(0.0, 0.0, 20.0), Vec3::new(0.0, 0.0, 0.1));
        let (u, flags) = allocate(&w, &p).unwrap();
        assert!(flags.yaw_torque && !flags.collective);
        assert_relative_eq!(u.f1 + u.f2, 20.0, epsilon = 1e-12);
        assert_relative_eq!(u.f1, p.f_max, epsilon = 1e-12);

        let (u, flags) = allocate(&BodyWrench::new(Vec3::new(0.0, 0.0, 30.0), Vec3::zeros()), &p).unwrap();
        assert!(flags.collective);
        assert_eq!((u.f1, u.f2), (p.f_max, p.f_max));
    }

    #[test]
    fn validate_rejects_bad_params() {
        assert!(params().validate().is_ok());
        let p = VehicleParams { mass: -1.0, ..params() };
        assert_eq!(p.validate().unwrap_err().key, "mass");
        let p = VehicleParams { inertia: Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0)), ..params() };
        assert_eq!(p.validate().unwrap_err().key, "inertia");
    }

    fn feasible_wrench() -> impl Strategy<Value = BodyWrench> {
        (2.0..24.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -0.5..0.5f64).prop_map(
            |(t_z, fx, fy, mx, my, yaw)| {
                let p = VehicleParams::default();
                // keep deflections within limits: lateral force and tilt torque scale with thrust
                let lateral = 0.15 * t_z;
                let tilt = 0.01 * t_z;
                BodyWrench::new(
                    Vec3::new(fx * lateral, fy * lateral, t_z),
                    Vec3::new(mx * tilt, my * tilt, yaw * p.km_over_kf * t_z),
                )
            },
        )
    }

    proptest! {
        #[test]
        fn unit_cube_commands_are_feasible_and_invertible(u in prop::array::uniform6(0.0..=1.0f64)) {
            let p = params();
            let cmd = ActuatorCommand::from_unit_cube(&p, u);
            prop_assert!(cmd.limit_violation(&p).is_none());
            let w = forward_wrench(&cmd, &p);
            prop_assert!(forward_wrench(&mix(&w, &p).unwrap(), &p).max_abs_diff(&w) < 1e-9);
            let (a, flags) = allocate(&w, &p).unwrap();
            prop_assert!(!flags.any(), "{:?}", flags);
            prop_assert!(forward_wrench(&a, &p).max_abs_diff(&w) < 1e-9);
        }

        #[test]
        fn mix_round_trip(w in feasible_wrench()) {
            let p = params();
            let u = mix(&w, &p).unwrap();
            prop_assert!(forward_wrench(&u, &p).max_abs_diff(&w) < 1e-9);
            let (a, flags) = allocate(&w, &p).unwrap();
            if !flags.any() {
                prop_assert!(forward_wrench(&a, &p).max_abs_diff(&w) < 1e-9);
            }
        }

        #[test]
        fn vertical_wrench_mixes_symmetrically(t_z in 1.0..24.0f64) {
            let u = mix(&BodyWrench::new(Vec3::new(0.0, 0.0, t_z), Vec3::zeros()), &params()).unwrap();
            prop_assert_eq!(u.f1, u.f2);
            prop_assert_eq!(u.angles(), [0.0; 4]);
        }

        #[test]
        fn lateral_force_has_no_net_torque(fx in -2.0..2.0f64, t_z in 4.0..20.0f64) {
            let p = params();
            let u = mix(&BodyWrench::new(Vec3::new(fx, 0.0, t_z), Vec3::zeros()), &p).unwrap();
            prop_assert!(forward_wrench(&u, &p).torque.amax() < 1e-9);
        }
    }
}
