use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ArmModel, JointConfig, JointLimits, KinematicsError, Pose, Transform};
use crate::autodiff::Real;

/// Planar mobile base carrying the arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    /// Base frame to arm root.
    pub mount_transform: Transform<f64>,
    /// Bounds on `[ψ, x, y]`.
    pub pose_limits: JointLimits,
}

impl Default for BaseModel {
    fn default() -> Self {
        BaseModel {
            mount_transform: Transform::from_translation([0.0, 0.0, 0.2]),
            pose_limits: JointLimits { lower: vec![-PI, -3.0, -3.0], upper: vec![PI, 3.0, 3.0] },
        }
    }
}

impl BaseModel {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.pose_limits.len() != 3 {
            return Err(KinematicsError::InvalidModel("base needs limits for ψ, x, y".into()));
        }
        let t = &self.mount_transform;
        if t.translation.iter().any(|v| !v.is_finite()) || !(t.orthonormality_error() <= 1e-9) {
            return Err(KinematicsError::InvalidModel("mount transform is not rigid".into()));
        }
        self.pose_limits.validate()
    }

    /// World pose of the arm root for base coordinates `[ψ, x, y]`.
    pub fn arm_root<T: Real>(&self, base: &[T]) -> Transform<T> {
        Transform::planar(base[0], base[1], base[2]).then_const(&self.mount_transform)
    }
}

/// Mobile manipulator: configuration `[ψ, x, y, q₁ … q₆]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AmmrModel {
    pub base: BaseModel,
    pub arm: ArmModel,
}

impl AmmrModel {
    pub const DOF: usize = 9;

    pub fn validate(&self) -> Result<(), KinematicsError> {
        self.base.validate()?;
        self.arm.validate()
    }

    pub fn joint_limits(&self) -> JointLimits {
        self.base.pose_limits.concat(&self.arm.joint_limits)
    }

    pub fn forward<T: Real>(&self, theta: &[T]) -> Transform<T> {
        self.base.arm_root(&theta[..3]).compose(&self.arm.forward(&theta[3..9]))
    }

    pub fn fk(&self, theta: &JointConfig) -> Result<Pose, KinematicsError> {
        theta.expect_dim(Self::DOF)?;
        Ok(Pose::from_transform(&self.forward(theta.as_slice())))
    }

    /// Expresses a world-frame target in the arm-root frame of base `[ψ, x, y]`.
    pub fn target_in_root(&self, base: &[f64], target: &Pose) -> Result<Pose, KinematicsError> {
        let world = target.to_transform()?;
        let root = self.base.arm_root(base);
        Ok(Pose::from_transform(&root.inverse().compose(&world)))
    }

    /// Whether some arm configuration reaches `target` from base `[ψ, x, y]`.
    pub fn arm_ik_exists(&self, base: &[f64], target: &Pose) -> Result<bool, KinematicsError> {
        let local = self.target_in_root(base, target)?;
        Ok(!self.arm.ik_solutions(&local)?.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_base_is_mount_then_arm() {
        let m = AmmrModel::default();
        let q = [0.2, -0.3, 0.5, 0.1, 0.4, -0.6];
        let mut theta = vec![0.0; 3];
        theta.extend_from_slice(&q);
        let whole = m.forward(&theta);
        let arm = m.arm.forward(&q);
        for i in 0..3 {
            assert!((whole.translation[i] - arm.translation[i] - [0.0, 0.0, 0.2][i]).abs() < 1e-15);
        }
    }

    #[test]
    fn base_target_round_trip() {
        let m = AmmrModel::default();
        let theta = JointConfig(vec![0.7, 1.0, -2.0, 0.3, -0.5, 0.8, 0.2, 0.9, -0.4]);
        let target = m.fk(&theta).unwrap();
        assert!(m.arm_ik_exists(&theta.0[..3], &target).unwrap());
        let far = [0.0, -3.0, 3.0];
        assert!(!m.arm_ik_exists(&far, &target).unwrap());
    }
}
