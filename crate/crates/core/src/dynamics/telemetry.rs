use std::io::Write;

use super::RigidBodyState;
use crate::actuation::{ActuatorCommand, BodyWrench, SaturationFlags};
use crate::control::ControlMode;
use crate::so3::{Rotation, Vec3};

pub const CSV_HEADER: [&str; 27] = [
    "t", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "q_w", "q_x", "q_y", "q_z", "omega_x", "omega_y",
    "omega_z", "p_ref_x", "p_ref_y", "p_ref_z", "roll_ref", "pitch_ref", "yaw_ref", "f1", "f2",
    "theta1", "theta2", "delta1", "delta2", "mode",
];

/// One controller-rate sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub state: RigidBodyState,
    pub reference_position: Vec3,
    pub reference_attitude: Rotation,
    pub command: ActuatorCommand,
    pub wrench: BodyWrench,
    pub mode: ControlMode,
    pub saturation: SaturationFlags,
}

impl TelemetryRecord {
    pub fn position_error(&self) -> f64 {
        (self.reference_position - self.state.position).norm()
    }

    /// Geodesic angle between reference and actual attitude, rad.
    pub fn attitude_error(&self) -> f64 {
        self.reference_attitude.geodesic_distance(&self.state.attitude)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TelemetryLog {
    pub records: Vec<TelemetryRecord>,
}

impl TelemetryLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn reference_positions(&self) -> Vec<Vec3> {
        self.records.iter().map(|r| r.reference_position).collect()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.records.iter().map(|r| r.state.position).collect()
    }

    /// Writes the log as CSV. Formatting is fixed so identical runs give
    /// byte-identical files.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let mut row: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        for r in &self.records {
            row.clear();
            row.push(format!("{:.4}", r.t));
            let s = &r.state;
            let q = s.attitude.to_quaternion();
            let (roll, pitch, yaw) = r.reference_attitude.to_euler();
            let euler = [roll, pitch, yaw];
            let command = r.command.as_array();
            let values = s
                .position
                .iter()
                .chain(s.velocity.iter())
                .chain(q.iter())
                .chain(s.omega.iter())
                .chain(r.reference_position.iter())
                .chain(euler.iter())
                .chain(command.iter());
            row.extend(values.map(|v| format!("{:.9}", v)));
            row.push(r.mode.as_str().to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &std::path::Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(std::io::Error::other)
    }
}
