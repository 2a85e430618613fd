use serde::{Deserialize, Serialize};

use super::{pose_distance, AmmrModel, JointConfig, JointLimits, KinematicsError, PlanarChain, Pose, DEFAULT_ROTATION_WEIGHT};

/// Any robot a sampler can target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotModel {
    Planar(PlanarChain),
    Ammr(AmmrModel),
}

impl RobotModel {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        match self {
            RobotModel::Planar(c) => c.validate(),
            RobotModel::Ammr(m) => m.validate(),
        }
    }

    /// Full configuration dimension (2 or 9).
    pub fn dof(&self) -> usize {
        match self {
            RobotModel::Planar(_) => 2,
            RobotModel::Ammr(_) => AmmrModel::DOF,
        }
    }

    pub fn joint_limits(&self) -> JointLimits {
        match self {
            RobotModel::Planar(c) => c.joint_limits.clone(),
            RobotModel::Ammr(m) => m.joint_limits(),
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, RobotModel::Planar(_))
    }

    pub fn fk(&self, theta: &JointConfig) -> Result<Pose, KinematicsError> {
        match self {
            RobotModel::Planar(c) => c.fk(theta),
            RobotModel::Ammr(m) => m.fk(theta),
        }
    }
}

/// CFS membership: pose constraint within `tol` and every coordinate inside
/// its limits.
///
/// For a mobile manipulator a 3-dimensional `θ` is read as a base pose
/// `[ψ, x, y]`; it is a member when the base is in limits and some arm
/// configuration reaches the target exactly.
pub fn in_cfs(model: &RobotModel, theta: &JointConfig, target: &Pose, tol: f64) -> Result<bool, KinematicsError> {
    if let RobotModel::Ammr(m) = model {
        if theta.len() == 3 {
            if !m.base.pose_limits.contains(theta) {
                return Ok(false);
            }
            return m.arm_ik_exists(theta.as_slice(), target);
        }
    }
    theta.expect_dim(model.dof())?;
    if !model.joint_limits().contains(theta) {
        return Ok(false);
    }
    let reached = model.fk(theta)?;
    Ok(pose_distance(&reached, target, DEFAULT_ROTATION_WEIGHT)? <= tol)
}
