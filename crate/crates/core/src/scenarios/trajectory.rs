//! Closed-form reference generators.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::control::{ControlMode, ModeSchedule, Reference, TrajectorySample};
use crate::so3::{exp_so3, Rotation, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("figure-8 limits leave no feasible speed (`{key}` = {value})")]
    Infeasible { key: &'static str, value: f64 },
    #[error("`{key}` {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// A Gerono lemniscate `(A·sin φ, B·sin 2φ, altitude)` flown at constant
/// phase rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure8Spec {
    pub amplitude_x: f64,
    pub amplitude_y: f64,
    pub altitude: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub laps: u32,
}

impl Default for Figure8Spec {
    fn default() -> Self {
        Self { amplitude_x: 3.2, amplitude_y: 1.6, altitude: 1.2, v_max: 1.5, a_max: 0.7, laps: 1 }
    }
}

/// Shape of the lemniscate, shared between segments of a multi-segment run.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Lemniscate {
    a: f64,
    b: f64,
    altitude: f64,
}

impl Lemniscate {
    fn position(&self, phase: f64) -> Vec3 {
        Vec3::new(self.a * phase.sin(), self.b * (2.0 * phase).sin(), self.altitude)
    }

    /// dp/dφ
    fn tangent(&self, phase: f64) -> Vec3 {
        Vec3::new(self.a * phase.cos(), 2.0 * self.b * (2.0 * phase).cos(), 0.0)
    }

    /// d²p/dφ²
    fn curvature(&self, phase: f64) -> Vec3 {
        Vec3::new(-self.a * phase.sin(), -4.0 * self.b * (2.0 * phase).sin(), 0.0)
    }

    /// max‖dp/dφ‖, attained at φ = 0.
    fn max_tangent(&self) -> f64 {
        self.tangent(0.0).norm()
    }

    /// max‖d²p/dφ²‖ by dense sampling over a quarter period (the norm has
    /// period π and is symmetric about π/2), refined by golden-section search.
    fn max_curvature(&self) -> f64 {
        let f = |phi: f64| self.curvature(phi).norm();
        const N: usize = 2048;
        let h = FRAC_PI_2 / N as f64;
        let best = (0..=N).max_by(|&i, &j| f(i as f64 * h).total_cmp(&f(j as f64 * h))).unwrap_or(0);
        let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let m1 = hi - inv_phi * (hi - lo);
            let m2 = lo + inv_phi * (hi - lo);
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        f(0.5 * (lo + hi)).max(f(best as f64 * h))
    }

    /// Largest phase rate keeping speed ≤ `v_max` and acceleration ≤ `a_max`.
    fn max_rate(&self, v_max: f64, a_max: f64) -> f64 {
        (v_max / self.max_tangent()).min((a_max / self.max_curvature()).sqrt())
    }
}

fn check_positive(key: &'static str, value: f64) -> Result<(), TrajectoryError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TrajectoryError::Invalid { key, reason: format!("must be positive, got {value}") })
    }
}

impl Figure8Spec {
    fn shape(&self) -> Lemniscate {
        Lemniscate { a: self.amplitude_x, b: self.amplitude_y, altitude: self.altitude }
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        check_positive("amplitude_x", self.amplitude_x)?;
        check_positive("amplitude_y", self.amplitude_y)?;
        if !self.altitude.is_finite() {
            return Err(TrajectoryError::Invalid { key: "altitude", reason: "must be finite".into() });
        }
        if !(self.v_max > 0.0) {
            return Err(TrajectoryError::Infeasible { key: "v_max", value: self.v_max });
        }
        if !(self.a_max > 0.0) {
            return Err(TrajectoryError::Infeasible { key: "a_max", value: self.a_max });
        }
        Ok(())
    }

    /// Phase rate Ω, rad/s.
    pub fn phase_rate(&self) -> Result<f64, TrajectoryError> {
        self.validate()?;
        Ok(self.shape().max_rate(self.v_max, self.a_max))
    }

    /// Duration of one lap, s.
    pub fn period(&self) -> Result<f64, TrajectoryError> {
        Ok(TAU / self.phase_rate()?)
    }
}

/// Reference at time `t` on the constant-rate lemniscate; derivatives are
/// analytic.
pub fn figure8_sample(spec: &Figure8Spec, t: f64) -> Result<TrajectorySample, TrajectoryError> {
    let omega = spec.phase_rate()?;
    let shape = spec.shape();
    let phase = omega * t;
    Ok(TrajectorySample {
        position: shape.position(phase),
        velocity: shape.tangent(phase) * omega,
        acceleration: shape.curvature(phase) * (omega * omega),
        yaw: 0.0,
        attitude: Some(Rotation::identity()),
    })
}

/// Portion of a multi-segment figure-8 flight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure8Segment {
    pub mode: ControlMode,
    pub v_max: f64,
    pub a_max: f64,
    pub laps: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PhasePiece {
    /// Phase rate blends from `from` to `to` with a raised-cosine profile.
    Ramp { from: f64, to: f64 },
    Cruise { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    start: f64,
    duration: f64,
    phase0: f64,
    kind: PhasePiece,
}

impl Piece {
    /// (phase, rate, rate derivative) at `tau` seconds into the piece.
    fn eval(&self, tau: f64) -> (f64, f64, f64) {
        match self.kind {
            PhasePiece::Cruise { rate } => (self.phase0 + rate * tau, rate, 0.0),
            PhasePiece::Ramp { from, to } => {
                let d = self.duration;
                let delta = to - from;
                let x = PI * tau / d;
                let rate = from + 0.5 * delta * (1.0 - x.cos());
                let phase = self.phase0 + from * tau + 0.5 * delta * (tau - d / PI * x.sin());
                (phase, rate, 0.5 * delta * PI / d * x.sin())
            }
        }
    }

    fn end_phase(&self) -> f64 {
        self.eval(self.duration).0
    }
}

/// Figure-8 flight made of segments with their own speed limits and control
/// modes, joined by smooth phase-rate ramps.
///
/// The vehicle starts at rest, ramps up into the first segment so that the
/// first lap begins at the lemniscate's centre crossing, and ramps down to
/// rest after the last segment. The ramp into segment `k > 0` is flown in
/// segment `k`'s mode; switches therefore happen at a centre crossing where
/// the reference acceleration vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure8Flight {
    shape: Lemniscate,
    pieces: Vec<Piece>,
    schedule: Vec<(f64, ControlMode)>,
    end: f64,
    end_phase: f64,
}

impl Figure8Flight {
    pub fn new(
        amplitude_x: f64,
        amplitude_y: f64,
        altitude: f64,
        segments: &[Figure8Segment],
        ramp_time: f64,
    ) -> Result<Self, TrajectoryError> {
        if segments.is_empty() {
            return Err(TrajectoryError::Invalid { key: "segments", reason: "at least one segment required".into() });
        }
        check_positive("ramp_time", ramp_time)?;
        let mut rates = Vec::with_capacity(segments.len());
        for s in segments {
            let spec = Figure8Spec { amplitude_x, amplitude_y, altitude, v_max: s.v_max, a_max: s.a_max, laps: s.laps };
            rates.push(spec.phase_rate()?);
        }
        let shape = Lemniscate { a: amplitude_x, b: amplitude_y, altitude };

        let mut pieces = Vec::new();
        let mut schedule = Vec::new();
        let mut t = 0.0;
        let push = |pieces: &mut Vec<Piece>, t: &mut f64, duration: f64, phase0: f64, kind| {
            let piece = Piece { start: *t, duration, phase0, kind };
            *t += duration;
            pieces.push(piece);
            piece.end_phase()
        };
        // start so that the ramp ends exactly at phase 0
        let mut phase = -0.5 * rates[0] * ramp_time;
        let mut previous_rate = 0.0;
        for (k, (seg, &rate)) in segments.iter().zip(&rates).enumerate() {
            if k == 0 {
                schedule.push((0.0, seg.mode));
            } else if schedule.last().map(|s: &(f64, ControlMode)| s.1) != Some(seg.mode) {
                schedule.push((t, seg.mode));
            }
            phase = push(&mut pieces, &mut t, ramp_time, phase, PhasePiece::Ramp { from: previous_rate, to: rate });
            if k == 0 {
                phase = 0.0;
            }
            let cruise = seg.laps as f64 * TAU / rate;
            if cruise > 0.0 {
                phase = push(&mut pieces, &mut t, cruise, phase, PhasePiece::Cruise { rate });
            }
            previous_rate = rate;
        }
        let end_phase = push(&mut pieces, &mut t, ramp_time, phase, PhasePiece::Ramp { from: previous_rate, to: 0.0 });
        Ok(Self { shape, pieces, schedule, end: t, end_phase })
    }

    /// Time at which the reference comes to rest.
    pub fn end_time(&self) -> f64 {
        self.end
    }

    pub fn mode_schedule(&self) -> ModeSchedule {
        ModeSchedule::new(self.schedule.clone()).unwrap_or_else(|_| ModeSchedule::constant(self.schedule[0].1))
    }

    pub fn start_position(&self) -> Vec3 {
        self.shape.position(self.pieces[0].phase0)
    }

    fn phase(&self, t: f64) -> (f64, f64, f64) {
        if t <= 0.0 {
            return (self.pieces[0].phase0, 0.0, 0.0);
        }
        match self.pieces.iter().find(|p| t < p.start + p.duration) {
            Some(p) => p.eval(t - p.start),
            None => (self.end_phase, 0.0, 0.0),
        }
    }
}

impl Reference for Figure8Flight {
    fn sample(&self, t: f64) -> TrajectorySample {
        let (phase, rate, rate_dot) = self.phase(t);
        let tangent = self.shape.tangent(phase);
        TrajectorySample {
            position: self.shape.position(phase),
            velocity: tangent * rate,
            acceleration: self.shape.curvature(phase) * (rate * rate) + tangent * rate_dot,
            yaw: 0.0,
            attitude: Some(Rotation::identity()),
        }
    }
}

/// Single-axis attitude command: a sinusoid that dwells at each peak during
/// the first half of the run and is a plain sinusoid afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeProfileSpec {
    /// Angular frequency of the sinusoid, rad/s.
    pub rate: f64,
    pub max_angle: f64,
    pub hold_duration: f64,
    pub total_duration: f64,
    pub axis: Vec3,
}

impl Default for AttitudeProfileSpec {
    fn default() -> Self {
        Self {
            rate: 1.5,
            max_angle: 20f64.to_radians(),
            hold_duration: FRAC_PI_2,
            total_duration: 30.0,
            axis: Vec3::x(),
        }
    }
}

impl AttitudeProfileSpec {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        check_positive("rate", self.rate)?;
        check_positive("max_angle", self.max_angle)?;
        check_positive("total_duration", self.total_duration)?;
        if !(self.hold_duration >= 0.0) {
            return Err(TrajectoryError::Invalid { key: "hold_duration", reason: "must be non-negative".into() });
        }
        if !(self.axis.norm() > 1e-9) {
            return Err(TrajectoryError::Invalid { key: "axis", reason: "must be non-zero".into() });
        }
        Ok(())
    }

    /// Length of one dwell cycle (two peaks).
    fn dwell_cycle(&self) -> f64 {
        TAU / self.rate + 2.0 * self.hold_duration
    }

    /// End of the dwell phase: as many whole dwell cycles as fit in the first
    /// half (at least one), so the hand-over to the plain sinusoid happens
    /// at a zero crossing.
    pub fn dwell_end(&self) -> f64 {
        let cycles = (0.5 * self.total_duration / self.dwell_cycle()).floor().max(1.0);
        cycles * self.dwell_cycle()
    }

    /// Commanded angle about `axis`, rad.
    pub fn angle(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.total_duration);
        let w = self.rate;
        let h = self.hold_duration;
        let unit = if t < self.dwell_end() {
            let q = FRAC_PI_2 / w;
            let tau = t % self.dwell_cycle();
            if tau < q {
                (w * tau).sin()
            } else if tau < q + h {
                1.0
            } else if tau < 3.0 * q + h {
                (w * (tau - h)).sin()
            } else if tau < 3.0 * q + 2.0 * h {
                -1.0
            } else {
                (w * (tau - 2.0 * h)).sin()
            }
        } else {
            (w * (t - self.dwell_end())).sin()
        };
        self.max_angle * unit
    }
}

pub fn attitude_profile_sample(spec: &AttitudeProfileSpec, t: f64) -> Rotation {
    exp_so3(&(spec.axis.normalize() * spec.angle(t)))
}

/// Hold `position` while tracking an attitude profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeProfileReference {
    pub position: Vec3,
    pub spec: AttitudeProfileSpec,
}

impl Reference for AttitudeProfileReference {
    fn sample(&self, t: f64) -> TrajectorySample {
        TrajectorySample::hover(self.position, attitude_profile_sample(&self.spec, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_speed_and_accel(spec: &Figure8Spec) -> (f64, f64) {
        let period = spec.period().unwrap();
        let n = (period * 1000.0) as usize;
        (0..=n).fold((0.0f64, 0.0f64), |(v, a), i| {
            let s = figure8_sample(spec, i as f64 * 1e-3).unwrap();
            (v.max(s.velocity.norm()), a.max(s.acceleration.norm()))
        })
    }

    #[test]
    fn figure8_origin() {
        let spec = Figure8Spec::default();
        let w = spec.phase_rate().unwrap();
        let s = figure8_sample(&spec, 0.0).unwrap();
        assert_eq!(s.position, Vec3::new(0.0, 0.0, 1.2));
        assert_relative_eq!(s.velocity, Vec3::new(3.2 * w, 3.2 * w, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn figure8_respects_limits() {
        let fa = Figure8Spec { v_max: 1.5, a_max: 0.7, ..Default::default() };
        let (v, a) = max_speed_and_accel(&fa);
        assert!((0.95 * 1.5..=1.5 + 1e-12).contains(&v), "{v}");
        assert!(a <= 0.7 + 1e-9, "{a}");

        let ua = Figure8Spec { v_max: 3.0, a_max: 3.0, ..Default::default() };
        let (v, a) = max_speed_and_accel(&ua);
        assert!(v <= 3.0 + 1e-12, "{v}");
        assert!(a <= 3.0 + 1e-9, "{a}");
    }

    #[test]
    fn figure8_derivatives_match_finite_differences() {
        let spec = Figure8Spec::default();
        let h = 1e-5;
        for i in 0..200 {
            let t = i as f64 * 0.1;
            let s = figure8_sample(&spec, t).unwrap();
            let (m, p) = (figure8_sample(&spec, t - h).unwrap(), figure8_sample(&spec, t + h).unwrap());
            assert!(((p.position - m.position) / (2.0 * h) - s.velocity).amax() < 1e-6);
            assert!(((p.velocity - m.velocity) / (2.0 * h) - s.acceleration).amax() < 1e-6);
        }
    }

    #[test]
    fn figure8_infeasible() {
        let spec = Figure8Spec { v_max: 0.0, ..Default::default() };
        assert!(matches!(figure8_sample(&spec, 0.0), Err(TrajectoryError::Infeasible { key: "v_max", .. })));
    }

    fn bimodal() -> Figure8Flight {
        Figure8Flight::new(
            3.2,
            1.6,
            1.2,
            &[
                Figure8Segment { mode: ControlMode::FullyActuated, v_max: 1.5, a_max: 0.7, laps: 1 },
                Figure8Segment { mode: ControlMode::Underactuated, v_max: 3.0, a_max: 3.0, laps: 2 },
            ],
            3.0,
        )
        .unwrap()
    }

    #[test]
    fn flight_is_smooth_and_starts_and_ends_at_rest() {
        let f = bimodal();
        let s0 = f.sample(0.0);
        assert_eq!(s0.velocity, Vec3::zeros());
        assert_eq!(s0.position, f.start_position());
        assert!(f.sample(f.end_time() + 1.0).velocity.norm() < 1e-12);
        let h = 1e-5;
        let mut t = 0.05;
        while t < f.end_time() {
            let s = f.sample(t);
            let (m, p) = (f.sample(t - h), f.sample(t + h));
            assert!(((p.position - m.position) / (2.0 * h) - s.velocity).amax() < 1e-5, "t={t}");
            assert!(((p.velocity - m.velocity) / (2.0 * h) - s.acceleration).amax() < 1e-5, "t={t}");
            t += 0.05;
        }
    }

    #[test]
    fn flight_switches_mode_at_centre_crossing() {
        let f = bimodal();
        let switches = f.mode_schedule().switch_times();
        assert_eq!(switches.len(), 1);
        let s = f.sample(switches[0]);
        assert!((s.position - Vec3::new(0.0, 0.0, 1.2)).norm() < 1e-9);
        assert!(s.acceleration.norm() < 1e-9);
    }

    #[test]
    fn profile_examples() {
        let spec = AttitudeProfileSpec::default();
        assert_eq!(*attitude_profile_sample(&spec, 0.0).matrix(), *Rotation::identity().matrix());
        // first peak: end of the first quarter period, held for hold_duration
        let q = FRAC_PI_2 / spec.rate;
        for t in [q, q + 0.5 * spec.hold_duration, q + spec.hold_duration - 1e-6] {
            assert_eq!(spec.angle(t), spec.max_angle);
            let r = attitude_profile_sample(&spec, t);
            assert_relative_eq!(r.angle(), 20f64.to_radians(), epsilon = 1e-12);
        }
        assert!(spec.dwell_end() <= 0.5 * spec.total_duration);
    }

    #[test]
    fn profile_is_continuous_and_bounded() {
        let spec = AttitudeProfileSpec::default();
        let dt = 1e-3;
        let n = (spec.total_duration / dt) as usize;
        let mut prev = spec.angle(0.0);
        for i in 1..=n {
            let a = spec.angle(i as f64 * dt);
            assert!(a.abs() <= spec.max_angle);
            assert!((a - prev).abs() <= spec.rate * dt * 1.01, "jump at {}", i as f64 * dt);
            prev = a;
        }
    }
}
