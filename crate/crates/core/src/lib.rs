//! Simulation and control of a fully-actuated coaxial aerial vehicle: two
//! counter-rotating rotors, four control surfaces in the rotor wash, and a
//! controller that flies either fully actuated (attitude and position
//! decoupled) or as a conventional underactuated vehicle.
//!
//! Modules build on each other bottom-up: [`so3`] rotations,
//! [`actuation`] wrench mapping and allocation, [`dynamics`] rigid-body
//! integration, [`control`] the dual-mode controller, and [`scenarios`] the
//! reference trajectories and runner. [`config_analysis`] is a standalone
//! sizing study for multi-rotor layouts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod config_analysis;
pub mod control;
pub mod dynamics;
pub mod scenarios;
pub mod so3;

pub use actuation::{ActuatorCommand, AllocationError, BodyWrench, SaturationFlags, VehicleParams};
pub use control::{ControlError, ControlMode, ControllerGains, FlightController, ModeSchedule, TrajectorySample};
pub use dynamics::{RigidBodyState, SimConfig, SimError, TelemetryLog};
pub use scenarios::{ConfigError, ScenarioConfig, ScenarioReport};
pub use so3::{Mat3, Rotation, Vec3};

/// Process exit codes used by the command-line tool.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const ALLOCATION: i32 = 4;
}

/// Any failure a caller may want to map to an exit status.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Param(#[from] config_analysis::ParamError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Param(_) => exit_code::CONFIG,
            Error::Sim(SimError::Config { .. }) => exit_code::CONFIG,
            Error::Sim(e) if e.is_allocation_failure() => exit_code::ALLOCATION,
            Error::Sim(_) => exit_code::DIVERGENCE,
            Error::Allocation(_) => exit_code::ALLOCATION,
            Error::Io(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::from(ConfigError::Missing("scenario.kind".into())).exit_code(), 2);
        assert_eq!(Error::from(SimError::Divergence { t: 1.0 }).exit_code(), 3);
        let alloc = AllocationError::NonPositiveThrust { t_z: -1.0 };
        assert_eq!(Error::from(alloc).exit_code(), 4);
        let e = SimError::Control { t: 0.0, source: ControlError::Allocation(alloc) };
        assert_eq!(Error::from(e).exit_code(), 4);
        let e = SimError::Control { t: 0.0, source: ControlError::ReferenceSingularity };
        assert_eq!(Error::from(e).exit_code(), 3);
    }
}
