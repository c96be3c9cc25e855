//! Rigid-body plant: Newton–Euler equations and a fourth-order integrator on
//! `R³ × R³ × SO(3) × R³`.

mod sim;
mod telemetry;

pub use sim::{simulate, ControlOutput, Controller, SimConfig, SimFailure};
pub use telemetry::{TelemetryLog, TelemetryRecord, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::actuation::{AllocationError, BodyWrench, VehicleParams};
use crate::control::ControlError;
use crate::so3::{exp_so3, hat, Mat3, Rotation, Vec3};

/// Position and velocity in the inertial frame, attitude body→inertial,
/// angular velocity in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Rotation,
    pub omega: Vec3,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        Self::at_rest(Vec3::zeros())
    }
}

impl RigidBodyState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: Rotation::identity(),
            omega: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.attitude.matrix().iter().all(|x| x.is_finite())
            && self.omega.iter().all(|x| x.is_finite())
    }

    /// `½ ωᵀ J ω`
    pub fn rotational_energy(&self, inertia: &Mat3) -> f64 {
        0.5 * self.omega.dot(&(inertia * self.omega))
    }

    /// `R J ω`, the angular momentum in the inertial frame.
    pub fn angular_momentum(&self, inertia: &Mat3) -> Vec3 {
        self.attitude.apply(&(inertia * self.omega))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Mat3,
    pub omega: Vec3,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("integrator diverged at t = {t:.4} s")]
    Divergence { t: f64 },
    #[error("attitude left SO(3) at t = {t:.4} s: {source}")]
    AttitudeDrift { t: f64, source: crate::so3::So3Error },
    #[error("controller failed at t = {t:.4} s: {source}")]
    Control { t: f64, source: ControlError },
    #[error("invalid actuator command at t = {t:.4} s: {reason}")]
    InvalidCommand { t: f64, reason: String },
    #[error("invalid simulation config: `{key}` {reason}")]
    Config { key: &'static str, reason: String },
}

impl SimError {
    /// Time of failure, when the failure happened during a run.
    pub fn time(&self) -> Option<f64> {
        match self {
            SimError::Divergence { t }
            | SimError::AttitudeDrift { t, .. }
            | SimError::Control { t, .. }
            | SimError::InvalidCommand { t, .. } => Some(*t),
            SimError::Config { .. } => None,
        }
    }

    /// True when the failure originates in control allocation.
    pub fn is_allocation_failure(&self) -> bool {
        matches!(
            self,
            SimError::InvalidCommand { .. }
                | SimError::Control { source: ControlError::Allocation(_), .. }
        )
    }

    pub fn allocation_error(&self) -> Option<&AllocationError> {
        match self {
            SimError::Control { source: ControlError::Allocation(e), .. } => Some(e),
            _ => None,
        }
    }
}

fn translational_acceleration(attitude: &Rotation, w: &BodyWrench, p: &VehicleParams) -> Vec3 {
    p.gravity() + attitude.apply(&w.force) / p.mass
}

fn angular_acceleration(omega: &Vec3, w: &BodyWrench, inertia: &Mat3, inertia_inv: &Mat3) -> Vec3 {
    inertia_inv * (-omega.cross(&(inertia * omega)) + w.torque)
}

fn inverse_inertia(p: &VehicleParams) -> Mat3 {
    p.inertia.try_inverse().unwrap_or_else(|| Mat3::from_element(f64::NAN))
}

pub fn state_derivative(s: &RigidBodyState, w: &BodyWrench, p: &VehicleParams) -> StateDerivative {
    StateDerivative {
        position: s.velocity,
        velocity: translational_acceleration(&s.attitude, w, p),
        attitude: s.attitude.matrix() * hat(&s.omega),
        omega: angular_acceleration(&s.omega, w, &p.inertia, &inverse_inertia(p)),
    }
}

/// Inverse of the right Jacobian of SO(3): maps a body rate to the rate of
/// change of `v` in `R = R₀·exp(v)`.
fn right_jacobian_inverse(v: &Vec3, omega: &Vec3) -> Vec3 {
    let theta_sq = v.norm_squared();
    let c = if theta_sq < 1e-8 {
        1.0 / 12.0 + theta_sq / 720.0
    } else {
        let theta = theta_sq.sqrt();
        1.0 / theta_sq - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    let vxw = v.cross(omega);
    omega + 0.5 * vxw + c * v.cross(&vxw)
}

/// One step of the classical fourth-order Runge–Kutta scheme in
/// Munthe-Kaas form: translation and body rate use ordinary RK4, the attitude
/// is advanced by `R ← R·exp(Θ)` with `Θ` the RK4-weighted average of the
/// stage body rates pulled back to the Lie algebra.
///
/// The wrench is held constant over the step. The result is not
/// re-orthonormalized; `simulate` does that every `renorm_interval` steps.
pub fn step(
    s: &RigidBodyState,
    w: &BodyWrench,
    p: &VehicleParams,
    dt: f64,
) -> Result<RigidBodyState, SimError> {
    let inertia_inv = inverse_inertia(p);
    let stage = |theta: &Vec3, v: Vec3, omega: Vec3| {
        let r = s.attitude.compose(&exp_so3(theta));
        (
            v,
            translational_acceleration(&r, w, p),
            right_jacobian_inverse(theta, &omega),
            angular_acceleration(&omega, w, &p.inertia, &inertia_inv),
        )
    };
    let h = 0.5 * dt;
    let (v1, a1, k1, al1) = stage(&Vec3::zeros(), s.velocity, s.omega);
    let (v2, a2, k2, al2) = stage(&(k1 * h), s.velocity + a1 * h, s.omega + al1 * h);
    let (v3, a3, k3, al3) = stage(&(k2 * h), s.velocity + a2 * h, s.omega + al2 * h);
    let (v4, a4, k4, al4) = stage(&(k3 * dt), s.velocity + a3 * dt, s.omega + al3 * dt);
    let sixth = dt / 6.0;
    let next = RigidBodyState {
        position: s.position + (v1 + 2.0 * v2 + 2.0 * v3 + v4) * sixth,
        velocity: s.velocity + (a1 + 2.0 * a2 + 2.0 * a3 + a4) * sixth,
        attitude: s.attitude.compose(&exp_so3(&((k1 + 2.0 * k2 + 2.0 * k3 + k4) * sixth))),
        omega: s.omega + (al1 + 2.0 * al2 + 2.0 * al3 + al4) * sixth,
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(SimError::Divergence { t: f64::NAN })
    }
}
