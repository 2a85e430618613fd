use serde::{Deserialize, Serialize};

use super::transform::{Quaternion, Transform};
use super::KinematicsError;

/// Default weight of the rotation term in spatial pose distances (m/rad).
pub const DEFAULT_ROTATION_WEIGHT: f64 = 0.1;

/// Task-level target: a planar point or a full spatial pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pose {
    Planar { x: f64, y: f64 },
    Spatial { position: [f64; 3], orientation: Quaternion },
}

impl Pose {
    pub fn planar(x: f64, y: f64) -> Pose {
        Pose::Planar { x, y }
    }

    /// Builds a spatial pose, normalizing the quaternion.
    pub fn spatial(position: [f64; 3], orientation: Quaternion) -> Pose {
        Pose::Spatial { position, orientation: orientation.normalized() }
    }

    pub fn from_transform(t: &Transform<f64>) -> Pose {
        Pose::Spatial {
            position: t.translation,
            orientation: Quaternion::from_rotation_matrix(&t.rotation),
        }
    }

    pub fn to_transform(&self) -> Result<Transform<f64>, KinematicsError> {
        match self {
            Pose::Spatial { position, orientation } => Ok(Transform {
                rotation: orientation.to_rotation_matrix(),
                translation: *position,
            }),
            Pose::Planar { .. } => Err(KinematicsError::PoseVariant),
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, Pose::Planar { .. })
    }

    /// Position as a 3-vector (planar poses sit at z = 0).
    pub fn position(&self) -> [f64; 3] {
        match *self {
            Pose::Planar { x, y } => [x, y, 0.0],
            Pose::Spatial { position, .. } => position,
        }
    }

    /// `|‖q‖ − 1| ≤ 1e-9` for spatial poses; always true for planar ones.
    pub fn is_valid(&self) -> bool {
        match self {
            Pose::Planar { x, y } => x.is_finite() && y.is_finite(),
            Pose::Spatial { position, orientation } => {
                position.iter().all(|p| p.is_finite()) && (orientation.norm() - 1.0).abs() <= 1e-9
            }
        }
    }
}

/// Euclidean position error between two poses of the same variant.
pub fn position_error(a: &Pose, b: &Pose) -> Result<f64, KinematicsError> {
    if a.is_planar() != b.is_planar() {
        return Err(KinematicsError::PoseVariant);
    }
    let (pa, pb) = (a.position(), b.position());
    Ok(((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt())
}

/// Geodesic rotation error in radians; zero for planar poses.
pub fn orientation_error(a: &Pose, b: &Pose) -> Result<f64, KinematicsError> {
    match (a, b) {
        (Pose::Planar { .. }, Pose::Planar { .. }) => Ok(0.0),
        (Pose::Spatial { orientation: qa, .. }, Pose::Spatial { orientation: qb, .. }) => Ok(qa.angle_to(qb)),
        _ => Err(KinematicsError::PoseVariant),
    }
}

/// Planar: Euclidean distance. Spatial: `‖Δp‖ + rotation_weight · angle`.
pub fn pose_distance(a: &Pose, b: &Pose, rotation_weight: f64) -> Result<f64, KinematicsError> {
    Ok(position_error(a, b)? + rotation_weight * orientation_error(a, b)?)
}
