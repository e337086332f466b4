//! Planar and spatial poses, unit quaternions and the rotational distance
//! used by the reward and the success checks.
//!
//! Quaternions are always exchanged in `(w, x, y, z)` order.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|q| - 1` accepted by the checked quaternion entry points.
pub const UNIT_TOLERANCE: f64 = 1e-6;

const EXACT_UNIT: f64 = 1e-12;

/// Above this `|<a, b>|` slerp degenerates to normalized lerp.
const SLERP_NLERP_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("quaternion is not unit length (norm {norm})")]
    NotUnit { norm: f64 },
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Planar pose of the mobile base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn set_theta(&mut self, theta: f64) {
        self.theta = wrap_angle(theta);
    }

    /// Maps a point expressed in this frame into the parent frame.
    pub fn transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.x + c * px - s * py, self.y + s * px + c * py)
    }

    /// Maps a point expressed in the parent frame into this frame.
    pub fn inverse_transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Composition `self * other` (other expressed in this frame).
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (x, y) = self.transform_point(other.x, other.y);
        Pose2::new(x, y, self.theta + other.theta)
    }

    /// The same frame lifted to 3D at height zero.
    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.x, self.y, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.theta),
        )
    }
}

impl From<[f64; 3]> for Pose2 {
    fn from(v: [f64; 3]) -> Self {
        Pose2::new(v[0], v[1], v[2])
    }
}

impl From<Pose2> for [f64; 3] {
    fn from(p: Pose2) -> Self {
        [p.x, p.y, p.theta]
    }
}

/// Spatial pose; used for achieved, desired and goal end-effector poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Pose3Repr", into = "Pose3Repr")]
pub struct Pose3 {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Serialize, Deserialize)]
struct Pose3Repr {
    position: [f64; 3],
    /// `(w, x, y, z)`
    quaternion: [f64; 4],
}

impl TryFrom<Pose3Repr> for Pose3 {
    type Error = GeometryError;

    fn try_from(r: Pose3Repr) -> Result<Self, Self::Error> {
        Ok(Pose3 {
            position: Vector3::from(r.position),
            orientation: unit_from_wxyz(r.quaternion)?,
        })
    }
}

impl From<Pose3> for Pose3Repr {
    fn from(p: Pose3) -> Self {
        Pose3Repr {
            position: p.position.into(),
            quaternion: to_wxyz(&p.orientation),
        }
    }
}

impl Pose3 {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        // Renormalize so accumulated drift never escapes the unit-norm invariant.
        Self {
            position,
            orientation: UnitQuaternion::new_normalize(orientation.into_inner()),
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    pub fn distance(&self, other: &Pose3) -> f64 {
        (self.position - other.position).norm()
    }
}

/// `(w, x, y, z)` components of a quaternion.
pub fn to_wxyz(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Builds a unit quaternion from `(w, x, y, z)`, rejecting inputs whose norm
/// is further than [`UNIT_TOLERANCE`] from one.
pub fn unit_from_wxyz(v: [f64; 4]) -> Result<UnitQuaternion<f64>, GeometryError> {
    let q = Quaternion::new(v[0], v[1], v[2], v[3]);
    check_unit(&q)?;
    // Components that are already unit up to rounding are kept bit for bit,
    // so serialized poses read back unchanged.
    if (q.norm() - 1.0).abs() <= EXACT_UNIT {
        return Ok(UnitQuaternion::new_unchecked(q));
    }
    Ok(UnitQuaternion::new_normalize(q))
}

fn check_unit(q: &Quaternion<f64>) -> Result<(), GeometryError> {
    let norm = q.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
        return Err(GeometryError::NotUnit { norm });
    }
    Ok(())
}

/// Rotational distance `1 - <a, b>^2`, in `[0, 1]` and blind to the sign of
/// either quaternion.
pub fn d_rot(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let dot = a.coords.dot(&b.coords);
    (1.0 - dot * dot).clamp(0.0, 1.0)
}

/// [`d_rot`] on raw quaternions that have not been normalized by the type system.
pub fn d_rot_checked(a: &Quaternion<f64>, b: &Quaternion<f64>) -> Result<f64, GeometryError> {
    check_unit(a)?;
    check_unit(b)?;
    let dot = a.coords.dot(&b.coords);
    Ok((1.0 - dot * dot).clamp(0.0, 1.0))
}

/// Shortest-arc spherical linear interpolation; `t` is clamped to `[0, 1]`.
pub fn slerp(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, t: f64) -> UnitQuaternion<f64> {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let qa = a.coords;
    let mut qb = b.coords;
    let mut dot = qa.dot(&qb);
    if dot < 0.0 {
        qb = -qb;
        dot = -dot;
    }
    let coords = if dot > SLERP_NLERP_THRESHOLD {
        qa * (1.0 - t) + qb * t
    } else {
        let theta = dot.min(1.0).acos();
        let sin_theta = theta.sin();
        qa * (((1.0 - t) * theta).sin() / sin_theta) + qb * ((t * theta).sin() / sin_theta)
    };
    UnitQuaternion::new_normalize(Quaternion::from(coords))
}

/// Rotation vector (axis times angle, angle in `[0, pi]`) of a unit quaternion.
pub fn rotation_vector(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let (w, v) = if q.w < 0.0 {
        (-q.w, -q.imag())
    } else {
        (q.w, q.imag())
    };
    let n = v.norm();
    if n < 1e-12 {
        return v * 2.0;
    }
    let angle = 2.0 * n.atan2(w);
    v * (angle / n)
}

/// Rotation about the world z-axis.
pub fn yaw_quaternion(yaw: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
}

/// Expresses `pose` (world frame) in the planar `frame` lifted to 3D.
pub fn transform_to_frame(pose: &Pose3, frame: &Pose2) -> Pose3 {
    Pose3::from_isometry(&(frame.to_isometry().inverse() * pose.to_isometry()))
}

/// Inverse of [`transform_to_frame`].
pub fn transform_from_frame(pose: &Pose3, frame: &Pose2) -> Pose3 {
    Pose3::from_isometry(&(frame.to_isometry() * pose.to_isometry()))
}
