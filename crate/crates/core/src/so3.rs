//! Small 3-vector / 3x3 matrix helpers and the rotation group SO(3).
//!
//! Attitudes are kept as plain rotation matrices (body frame to inertial
//! frame). Quaternions and Euler angles only appear when writing telemetry.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Below this angle `exp_so3` switches to its Taylor expansion.
pub const SMALL_ANGLE: f64 = 1e-8;
/// Orthonormality / determinant tolerance for [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-9;
/// Skew-symmetry tolerance accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-6;
/// Largest Frobenius distance from SO(3) that [`project_to_so3`] repairs.
pub const MAX_PROJECTION_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum So3Error {
    #[error("matrix is not skew-symmetric (asymmetry {asymmetry:.3e}); malformed attitude error")]
    NotSkewSymmetric { asymmetry: f64 },
    #[error("matrix is {distance:.3e} from SO(3); integrator blow-up suspected")]
    FarFromRotation { distance: f64 },
}

/// A 3x3 matrix known to lie on SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Wraps `m` after checking `RᵀR = I` and `det R = 1` to [`ROTATION_TOL`].
    pub fn from_matrix(m: Mat3) -> Result<Self, So3Error> {
        let distance = orthonormality_defect(&m);
        if distance <= ROTATION_TOL {
            Ok(Rotation(m))
        } else {
            Err(So3Error::FarFromRotation { distance })
        }
    }

    /// Wraps `m` without checking. Callers must guarantee it is a rotation.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    /// Rotation of `angle` radians about the unit vector `axis`.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        exp_so3(&(axis.normalize() * angle))
    }

    pub fn about_x(angle: f64) -> Self {
        Self::about_axis(&Vec3::x(), angle)
    }

    pub fn about_y(angle: f64) -> Self {
        Self::about_axis(&Vec3::y(), angle)
    }

    pub fn about_z(angle: f64) -> Self {
        Self::about_axis(&Vec3::z(), angle)
    }

    /// Z-Y-X (yaw, pitch, roll) composition `Rz(yaw)·Ry(pitch)·Rx(roll)`.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        Rotation(
            Self::about_z(yaw).0 * Self::about_y(pitch).0 * Self::about_x(roll).0,
        )
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Body z-axis expressed in the inertial frame.
    pub fn body_z(&self) -> Vec3 {
        self.0.column(2).into_owned()
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let c = ((self.0.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        // acos loses precision near 0; recover the small-angle part from the skew part.
        let s = 0.5 * vee_unchecked(&(self.0 - self.0.transpose())).norm();
        s.atan2(c)
    }

    /// Geodesic distance `angle(selfᵀ·other)`.
    pub fn geodesic_distance(&self, other: &Rotation) -> f64 {
        self.transpose().compose(other).angle()
    }

    /// Angle between the body z-axis and the inertial z-axis.
    pub fn tilt(&self) -> f64 {
        self.0[(2, 2)].clamp(-1.0, 1.0).acos()
    }

    /// Unit quaternion `(w, x, y, z)` with `w ≥ 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0));
        let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
        [q.w, q.i, q.j, q.k]
    }

    /// `(roll, pitch, yaw)` matching [`Rotation::from_euler`].
    pub fn to_euler(&self) -> (f64, f64, f64) {
        Rotation3::from_matrix_unchecked(self.0).euler_angles()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl TryFrom<Mat3> for Rotation {
    type Error = So3Error;
    fn try_from(m: Mat3) -> Result<Self, Self::Error> {
        Rotation::from_matrix(m)
    }
}

impl From<Rotation> for Mat3 {
    fn from(r: Rotation) -> Mat3 {
        r.0
    }
}

/// `max(‖RᵀR − I‖_F, |det R − 1|)`.
pub fn orthonormality_defect(m: &Mat3) -> f64 {
    let ortho = (m.transpose() * m - Mat3::identity()).norm();
    let det = (m.determinant() - 1.0).abs();
    ortho.max(det)
}

/// Skew-symmetric matrix with `hat(v)·w = v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Inverse of [`hat`]. Rejects matrices that are not skew-symmetric.
pub fn vee(m: &Mat3) -> Result<Vec3, So3Error> {
    let asymmetry = (m + m.transpose()).amax();
    if asymmetry > SKEW_TOL {
        return Err(So3Error::NotSkewSymmetric { asymmetry });
    }
    Ok(vee_unchecked(m))
}

/// Rodrigues formula. `‖v‖` is the rotation angle, `v/‖v‖` the axis.
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta_sq = v.norm_squared();
    let theta = theta_sq.sqrt();
    let k = hat(v);
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
    };
    Rotation(Mat3::identity() + k * a + k * k * b)
}

/// Nearest rotation in the Frobenius sense (polar factor of the SVD).
pub fn project_to_so3(m: &Mat3) -> Result<Rotation, So3Error> {
    let distance = orthonormality_defect(m);
    if !distance.is_finite() || distance > MAX_PROJECTION_DISTANCE {
        return Err(So3Error::FarFromRotation { distance });
    }
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(So3Error::FarFromRotation { distance }),
    };
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    Ok(Rotation(u * d * v_t))
}
