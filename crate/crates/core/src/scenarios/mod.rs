//! Reference trajectories, scenario files and the closed-loop runner.

pub mod config;
pub mod metrics;
pub mod runner;
pub mod trajectory;

pub use config::{load_config, load_vehicle_params, parse_config, ConfigError, ScenarioConfig, TrajectorySpec};
pub use metrics::{rms, rmse, rmse_timed, MetricError};
pub use runner::{run_scenario, simulate_scenario, FailureReport, ScenarioOutcome, ScenarioReport};
pub use trajectory::{
    attitude_profile_sample, figure8_sample, AttitudeProfileReference, AttitudeProfileSpec, Figure8Flight,
    Figure8Segment, Figure8Spec, TrajectoryError,
};
