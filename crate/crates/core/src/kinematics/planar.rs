use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{JointConfig, JointLimits, KinematicsError, Pose};
use crate::autodiff::Real;

/// Two-link planar arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarChain {
    pub link_lengths: [f64; 2],
    pub joint_limits: JointLimits,
}

impl Default for PlanarChain {
    fn default() -> Self {
        PlanarChain {
            link_lengths: [1.0, 1.0],
            joint_limits: JointLimits::symmetric(2, PI),
        }
    }
}

impl PlanarChain {
    pub fn new(link_lengths: [f64; 2], joint_limits: JointLimits) -> Result<Self, KinematicsError> {
        let chain = PlanarChain { link_lengths, joint_limits };
        chain.validate()?;
        Ok(chain)
    }

    /// Default links with both joints limited to `[−3π/4, 3π/4]`.
    pub fn restricted() -> Self {
        PlanarChain {
            joint_limits: JointLimits::symmetric(2, 0.75 * PI),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.link_lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(KinematicsError::InvalidModel("link lengths must be positive".into()));
        }
        if self.joint_limits.len() != 2 {
            return Err(KinematicsError::InvalidModel("planar chain needs two joint limits".into()));
        }
        self.joint_limits.validate()
    }

    /// Reachable radii `[|l₁ − l₂|, l₁ + l₂]`.
    pub fn reach(&self) -> (f64, f64) {
        let [l1, l2] = self.link_lengths;
        ((l1 - l2).abs(), l1 + l2)
    }

    /// End-effector position for joint angles `q`.
    pub fn forward<T: Real>(&self, q: &[T]) -> [T; 2] {
        let [l1, l2] = self.link_lengths;
        let q12 = q[0] + q[1];
        [q[0].cos() * l1 + q12.cos() * l2, q[0].sin() * l1 + q12.sin() * l2]
    }

    pub fn fk(&self, q: &JointConfig) -> Result<Pose, KinematicsError> {
        q.expect_dim(2)?;
        let [x, y] = self.forward(q.as_slice());
        Ok(Pose::planar(x, y))
    }

    /// Closed-form IK: elbow-up (`θ₂ ≥ 0`) first, then elbow-down.
    ///
    /// Coincident branches (full extension or fold-back) are reported once.
    /// Solutions outside the joint limits are dropped.
    pub fn ik(&self, target: &Pose) -> Result<Vec<JointConfig>, KinematicsError> {
        let Pose::Planar { x, y } = *target else {
            return Err(KinematicsError::PoseVariant);
        };
        let [l1, l2] = self.link_lengths;
        let r2 = x * x + y * y;
        let mut c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        const SLACK: f64 = 1e-12;
        if c2.abs() > 1.0 + SLACK {
            return Ok(Vec::new());
        }
        c2 = c2.clamp(-1.0, 1.0);
        let base = y.atan2(x);
        let mut out: Vec<JointConfig> = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let t2 = sign * c2.acos();
            let t1 = wrap_angle(base - (l2 * t2.sin()).atan2(l1 + l2 * t2.cos()));
            let candidate = JointConfig(vec![t1, t2]);
            if !self.joint_limits.contains(&candidate) {
                // ±π describe the same elbow; try the representative inside the limits
                if let Some(alt) = self.joint_limits.wrap_into(&candidate) {
                    push_distinct(&mut out, alt);
                }
                continue;
            }
            push_distinct(&mut out, candidate);
        }
        Ok(out)
    }
}

fn push_distinct(out: &mut Vec<JointConfig>, candidate: JointConfig) {
    if out.iter().all(|s| angular_distance(s, &candidate) > 1e-9) {
        out.push(candidate);
    }
}

/// Max per-joint distance modulo 2π.
pub fn angular_distance(a: &JointConfig, b: &JointConfig) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| wrap_angle(x - y).abs())
        .fold(0.0, f64::max)
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}
