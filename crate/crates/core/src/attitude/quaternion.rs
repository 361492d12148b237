use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Hamilton quaternion stored scalar-last.
///
/// Orientation quaternions map body-frame vectors into the world frame:
/// `v_world = q ⊗ v_body ⊗ q*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Quaternion { x, y, z, w }
    }

    pub fn from_vector_scalar(v: Vector3<f64>, w: f64) -> Self {
        Quaternion::new(v.x, v.y, v.z, w)
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conjugate(&self) -> Self {
        Quaternion::new(-self.x, -self.y, -self.z, self.w)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }

    /// Unit-norm copy in canonical form (`w >= 0`). A zero quaternion maps to identity.
    pub fn normalize(&self) -> Self {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Quaternion::IDENTITY;
        }
        let s = if self.w < 0.0 { -1.0 / n } else { 1.0 / n };
        Quaternion::new(self.x * s, self.y * s, self.z * s, self.w * s)
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z + self.w * other.w
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Quaternion::IDENTITY;
        }
        let half = 0.5 * angle;
        Quaternion::from_vector_scalar(axis * (half.sin() / n), half.cos())
    }

    /// Exponential map of a rotation vector (axis × angle, radians).
    pub fn from_rotation_vector(rv: Vector3<f64>) -> Self {
        let angle = rv.norm();
        if angle < 1e-12 {
            return Quaternion::from_vector_scalar(rv * 0.5, 1.0).normalize();
        }
        let half = 0.5 * angle;
        Quaternion::from_vector_scalar(rv * (half.sin() / angle), half.cos())
    }

    /// Intrinsic Z-Y-X composition `Rz(yaw) · Ry(pitch) · Rx(roll)`, radians.
    pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Self {
        let qz = Quaternion::from_axis_angle(Vector3::z(), yaw);
        let qy = Quaternion::from_axis_angle(Vector3::y(), pitch);
        let qx = Quaternion::from_axis_angle(Vector3::x(), roll);
        (qz * qy * qx).normalize()
    }

    /// Body-to-world rotation matrix of a unit quaternion.
    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (x, y, z, w) = (self.x, self.y, self.z, self.w);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// `q ⊗ v ⊗ q*` for a unit quaternion.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let u = self.vector();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    /// `q* ⊗ v ⊗ q` for a unit quaternion (world to body).
    pub fn inverse_rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.conjugate().rotate(v)
    }

    /// Angle in radians of the rotation taking `self` to `other`, in [0, π].
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        let d = self.dot(other).abs() / (self.norm() * other.norm());
        2.0 * d.min(1.0).acos()
    }
}

/// Hamilton product.
pub fn quat_multiply(a: &Quaternion, b: &Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
    )
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        quat_multiply(&self, &rhs)
    }
}

/// Small-angle error quaternion: normalize([δθ/2; 1]).
pub fn error_quat(delta_theta: &Vector3<f64>) -> Quaternion {
    Quaternion::from_vector_scalar(delta_theta * 0.5, 1.0).normalize()
}

/// Skew-symmetric cross-product matrix: `skew(a) * b == a × b`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}
