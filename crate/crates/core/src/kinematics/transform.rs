use serde::{Deserialize, Serialize};

use crate::autodiff::{smooth_norm, Real};

/// Rigid transform `x ↦ R x + p`, generic over plain or taped scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform<T> {
    pub rotation: [[T; 3]; 3],
    pub translation: [T; 3],
}

impl Transform<f64> {
    pub fn identity() -> Self {
        Transform {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn from_translation(p: [f64; 3]) -> Self {
        Transform { translation: p, ..Self::identity() }
    }

    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let p = self.translation;
        let mut t = [0.0; 3];
        for (i, ti) in t.iter_mut().enumerate() {
            *ti = -(rt[i][0] * p[0] + rt[i][1] * p[1] + rt[i][2] * p[2]);
        }
        Transform { rotation: rt, translation: t }
    }

    /// Largest deviation of `RᵀR` from the identity plus `|det R − 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let r = &self.rotation;
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - want).abs());
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        err.max((det - 1.0).abs())
    }
}

impl<T: Real> Transform<T> {
    /// Standard DH link transform `Rz(θ) · Tz(d) · Tx(a) · Rx(α)`.
    pub fn dh(theta: T, a: f64, alpha: f64, d: f64) -> Self {
        let (ct, st) = (theta.cos(), theta.sin());
        let (ca, sa) = (alpha.cos(), alpha.sin());
        let zero = theta.constant_like(0.0);
        Transform {
            rotation: [
                [ct, -(st * ca), st * sa],
                [st, ct * ca, -(ct * sa)],
                [zero, theta.constant_like(sa), theta.constant_like(ca)],
            ],
            translation: [ct * a, st * a, theta.constant_like(d)],
        }
    }

    /// Planar base pose: yaw `psi` about z, then translation `(x, y, 0)`.
    pub fn planar(psi: T, x: T, y: T) -> Self {
        let (c, s) = (psi.cos(), psi.sin());
        let zero = psi.constant_like(0.0);
        let one = psi.constant_like(1.0);
        Transform {
            rotation: [[c, -s, zero], [s, c, zero], [zero, zero, one]],
            translation: [x, y, zero],
        }
    }

    pub fn compose(&self, rhs: &Transform<T>) -> Transform<T> {
        let a = &self.rotation;
        let b = &rhs.rotation;
        let rotation = std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        });
        let translation = std::array::from_fn(|i| {
            a[i][0] * rhs.translation[0] + a[i][1] * rhs.translation[1] + a[i][2] * rhs.translation[2]
                + self.translation[i]
        });
        Transform { rotation, translation }
    }

    /// `self ∘ c` for a constant transform `c`.
    pub fn then_const(&self, c: &Transform<f64>) -> Transform<T> {
        let a = &self.rotation;
        let b = &c.rotation;
        let rotation = std::array::from_fn(|i| {
            std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j])
        });
        let translation = std::array::from_fn(|i| {
            a[i][0] * c.translation[0] + a[i][1] * c.translation[1] + a[i][2] * c.translation[2] + self.translation[i]
        });
        Transform { rotation, translation }
    }

    pub fn value(&self) -> Transform<f64> {
        Transform {
            rotation: self.rotation.map(|row| row.map(Real::value)),
            translation: self.translation.map(Real::value),
        }
    }

    pub fn apply(&self, p: [T; 3]) -> [T; 3] {
        let r = &self.rotation;
        std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + self.translation[i])
    }
}

/// Geodesic angle between `rotation` and the constant `target`, computed
/// from `Rₜᵀ R` with `atan2` so it stays well-conditioned near 0 and π.
pub fn rotation_angle<T: Real>(rotation: &[[T; 3]; 3], target: &[[f64; 3]; 3]) -> T {
    // E = targetᵀ · rotation
    let e: [[T; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| rotation[0][j] * target[0][i] + rotation[1][j] * target[1][i] + rotation[2][j] * target[2][i])
    });
    let cos = (e[0][0] + e[1][1] + e[2][2] - 1.0) * 0.5;
    let skew = [e[2][1] - e[1][2], e[0][2] - e[2][0], e[1][0] - e[0][1]];
    let sin = smooth_norm(&skew) * 0.5;
    sin.atan2(cos)
}

/// Unit quaternion stored scalar-first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quaternion {
        let n = self.norm();
        Quaternion { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Quaternion {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let (s, c) = (angle * 0.5).sin_cos();
        Quaternion { w: c, x: s * axis[0] / n, y: s * axis[1] / n, z: s * axis[2] / n }
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Rotation angle separating two unit quaternions, in `[0, π]`.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        // 2·acos(|⟨a, b⟩|), written as 4·atan2(‖a − b‖, ‖a + b‖) on the
        // same hemisphere to keep precision near 0.
        let sign = if self.dot(other) < 0.0 { -1.0 } else { 1.0 };
        let (a, b) = (self.normalized(), other.normalized());
        let diff = [a.w - sign * b.w, a.x - sign * b.x, a.y - sign * b.y, a.z - sign * b.z];
        let sum = [a.w + sign * b.w, a.x + sign * b.x, a.y + sign * b.y, a.z + sign * b.z];
        let n = |v: [f64; 4]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        4.0 * n(diff).atan2(n(sum))
    }

    pub fn from_rotation_matrix(r: &[[f64; 3]; 3]) -> Quaternion {
        let m = nalgebra::Matrix3::from_fn(|i, j| r[i][j]);
        let rot = nalgebra::Rotation3::from_matrix_unchecked(m);
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
        let q = q.quaternion();
        let out = Quaternion { w: q.w, x: q.i, y: q.j, z: q.k }.normalized();
        if out.w < 0.0 {
            Quaternion { w: -out.w, x: -out.x, y: -out.y, z: -out.z }
        } else {
            out
        }
    }

    pub fn to_rotation_matrix(&self) -> [[f64; 3]; 3] {
        let Quaternion { w, x, y, z } = self.normalized();
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }
}
