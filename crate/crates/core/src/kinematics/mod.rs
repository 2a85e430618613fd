//! Robot geometry, forward and inverse kinematics, and CFS membership.
//!
//! Every forward map is written against [`Real`](crate::autodiff::Real) so
//! the same code evaluates plainly or records onto a tape.

mod ammr;
mod arm;
mod file;
mod planar;
mod pose;
mod robot;
mod transform;

pub use ammr::{AmmrModel, BaseModel};
pub use arm::{ArmIkBranch, ArmModel, DhRow};
pub use file::{load_robot, robot_hash, save_robot, RobotDocument, ROBOT_SCHEMA};
pub use planar::{angular_distance, wrap_angle, PlanarChain};
pub use pose::{orientation_error, pose_distance, position_error, Pose, DEFAULT_ROTATION_WEIGHT};
pub use robot::{in_cfs, RobotModel};
pub use transform::{rotation_angle, Quaternion, Transform};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("expected a {expected}-dimensional configuration, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("pose variants differ")]
    PoseVariant,
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("analytic IK needs a spherical wrist")]
    NoSphericalWrist,
    #[error("robot document: {0}")]
    Document(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Joint (or base) coordinates, in radians or meters per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn expect_dim(&self, n: usize) -> Result<(), KinematicsError> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(KinematicsError::Dimension { expected: n, got: self.0.len() })
        }
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        JointConfig(v)
    }
}

/// Per-coordinate closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl JointLimits {
    pub fn symmetric(n: usize, bound: f64) -> Self {
        JointLimits { lower: vec![-bound; n], upper: vec![bound; n] }
    }

    pub fn concat(&self, other: &JointLimits) -> JointLimits {
        JointLimits {
            lower: self.lower.iter().chain(&other.lower).copied().collect(),
            upper: self.upper.iter().chain(&other.upper).copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.lower.len() != self.upper.len() {
            return Err(KinematicsError::InvalidModel("limit bounds differ in length".into()));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(KinematicsError::InvalidModel(format!("joint {i}: need min < max, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, q: &JointConfig) -> bool {
        q.len() == self.len() && q.0.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Amount by which `q` leaves the box (0 when inside), per coordinate max.
    pub fn violation(&self, q: &JointConfig) -> f64 {
        q.0.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Shifts revolute coordinates by multiples of 2π to land inside the
    /// limits, if possible.
    pub fn wrap_into(&self, q: &JointConfig) -> Option<JointConfig> {
        let tau = 2.0 * std::f64::consts::PI;
        let mut out = q.clone();
        for (i, v) in out.0.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if *v >= lo && *v <= hi {
                continue;
            }
            let k = ((lo - *v) / tau).ceil();
            let shifted = *v + k * tau;
            if shifted <= hi {
                *v = shifted;
            } else {
                return None;
            }
        }
        Some(out)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn half_ranges(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (hi - lo)).collect()
    }
}
