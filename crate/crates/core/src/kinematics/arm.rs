use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::planar::{angular_distance, wrap_angle};
use super::{JointConfig, JointLimits, KinematicsError, Pose, Transform};
use crate::autodiff::Real;

/// One row of a standard Denavit–Hartenberg table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

/// Six-joint serial arm described by DH rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub dh_rows: Vec<DhRow>,
    pub joint_limits: JointLimits,
    pub spherical_wrist: bool,
}

/// Branch signs of a closed-form arm solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmIkBranch {
    pub shoulder: bool,
    pub elbow: bool,
    pub wrist: bool,
}

impl Default for ArmModel {
    fn default() -> Self {
        let a = [0.0, 0.4, 0.0, 0.0, 0.0, 0.0];
        let alpha = [-FRAC_PI_2, 0.0, -FRAC_PI_2, FRAC_PI_2, -FRAC_PI_2, 0.0];
        let d = [0.3, 0.0, 0.0, 0.35, 0.0, 0.1];
        ArmModel {
            dh_rows: (0..6)
                .map(|i| DhRow { a: a[i], alpha: alpha[i], d: d[i], theta_offset: 0.0 })
                .collect(),
            joint_limits: JointLimits::symmetric(6, 2.8),
            spherical_wrist: true,
        }
    }
}

const ANGLE_EPS: f64 = 1e-9;

impl ArmModel {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.dh_rows.len() != 6 {
            return Err(KinematicsError::InvalidModel(format!("arm needs 6 DH rows, got {}", self.dh_rows.len())));
        }
        if self.joint_limits.len() != 6 {
            return Err(KinematicsError::InvalidModel("arm needs 6 joint limits".into()));
        }
        if self.dh_rows.iter().any(|r| ![r.a, r.alpha, r.d, r.theta_offset].iter().all(|v| v.is_finite())) {
            return Err(KinematicsError::InvalidModel("non-finite DH parameter".into()));
        }
        if self.spherical_wrist && !self.wrist_axes_intersect() {
            return Err(KinematicsError::InvalidModel(
                "spherical_wrist set but the last three joint axes do not intersect".into(),
            ));
        }
        self.joint_limits.validate()
    }

    fn wrist_axes_intersect(&self) -> bool {
        let r = &self.dh_rows;
        r[3].a.abs() < ANGLE_EPS && r[4].a.abs() < ANGLE_EPS && r[4].d.abs() < ANGLE_EPS
    }

    /// Tool frame in the arm-root frame.
    pub fn forward<T: Real>(&self, q: &[T]) -> Transform<T> {
        self.forward_partial(q, 6)
    }

    /// Frame after the first `joints` links.
    pub fn forward_partial<T: Real>(&self, q: &[T], joints: usize) -> Transform<T> {
        let mut t = self.link(q[0], 0);
        for i in 1..joints {
            t = t.compose(&self.link(q[i], i));
        }
        t
    }

    fn link<T: Real>(&self, q: T, i: usize) -> Transform<T> {
        let r = &self.dh_rows[i];
        Transform::dh(q + r.theta_offset, r.a, r.alpha, r.d)
    }

    pub fn fk(&self, q: &JointConfig) -> Result<Pose, KinematicsError> {
        q.expect_dim(6)?;
        Ok(Pose::from_transform(&self.forward(q.as_slice())))
    }

    /// Distance range of the wrist center from the shoulder (frame 1) origin.
    pub fn wrist_reach(&self) -> (f64, f64) {
        let (l1, l2, _) = self.positioning_links();
        ((l1 - l2).abs(), l1 + l2)
    }

    /// Upper arm length, forearm length and forearm angle offset, from
    /// rows 2–4 of the table.
    fn positioning_links(&self) -> (f64, f64, f64) {
        let r = &self.dh_rows;
        let w3 = (r[2].a, -r[2].alpha.sin() * r[3].d);
        (r[1].a.abs(), w3.0.hypot(w3.1), w3.1.atan2(w3.0))
    }

    /// All closed-form solutions within the joint limits.
    pub fn ik_solutions(&self, target_in_root: &Pose) -> Result<Vec<JointConfig>, KinematicsError> {
        Ok(self.ik_branches(target_in_root)?.into_iter().map(|(_, q)| q).collect())
    }

    /// Closed-form solutions tagged with their branch, ordered by
    /// (shoulder, elbow, wrist) with `true` first. Coincident branches are
    /// reported once.
    pub fn ik_branches(&self, target_in_root: &Pose) -> Result<Vec<(ArmIkBranch, JointConfig)>, KinematicsError> {
        if !self.spherical_wrist {
            return Err(KinematicsError::NoSphericalWrist);
        }
        self.check_solvable_structure()?;
        let target = target_in_root.to_transform()?;
        let r = &self.dh_rows;

        // Wrist center: back off the tool offset along z₅.
        let (ca6, sa6) = (r[5].alpha.cos(), r[5].alpha.sin());
        let rot = &target.rotation;
        // z₅ = R · Rx(−α₆) · e_z = R · (0, sin α₆, cos α₆)
        let z5: [f64; 3] = std::array::from_fn(|i| rot[i][1] * sa6 + rot[i][2] * ca6);
        let wc: [f64; 3] = std::array::from_fn(|i| target.translation[i] - r[5].d * z5[i]);

        let (l1, l2, gamma3) = self.positioning_links();
        let lateral = r[1].d + r[2].d + r[2].alpha.cos() * r[3].d;
        let (wx, wy, wz) = (wc[0], wc[1], wc[2]);
        let rho = wx.hypot(wy);
        let phi = wy.atan2(wx);
        let sa1 = r[0].alpha.sin();
        let ca1 = r[0].alpha.cos();

        let mut out: Vec<(ArmIkBranch, JointConfig)> = Vec::with_capacity(8);
        // sin(φ − q₁) = (cos α₁ (w_z − d₁) − h) / (sin α₁ ρ)
        let shoulder_angles: Vec<(bool, f64)> = if rho < 1e-12 {
            // Wrist center on the base axis: every q₁ works when h = 0. Take
            // q₁ = 0 and its flip.
            vec![(true, 0.0), (false, PI)]
        } else {
            let s = (ca1 * (wz - r[0].d) - lateral) / (sa1 * rho);
            if s.abs() > 1.0 + 1e-12 {
                return Ok(out);
            }
            let s = s.clamp(-1.0, 1.0);
            let a = s.asin();
            vec![(true, phi - a), (false, phi - (PI - a))]
        };

        for (shoulder, q1_theta) in shoulder_angles {
            let (c1, s1) = (q1_theta.cos(), q1_theta.sin());
            let v = [c1 * wx + s1 * wy - r[0].a, -s1 * wx + c1 * wy, wz - r[0].d];
            let x1 = v[0];
            let y1 = ca1 * v[1] + sa1 * v[2];
            let mut c3 = (x1 * x1 + y1 * y1 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
            if c3.abs() > 1.0 + 1e-12 {
                continue;
            }
            c3 = c3.clamp(-1.0, 1.0);
            for elbow in [true, false] {
                let q3p = if elbow { c3.acos() } else { -c3.acos() };
                let q2_theta = y1.atan2(x1) - (l2 * q3p.sin()).atan2(l1 + l2 * q3p.cos());
                let q3_theta = q3p - gamma3;
                let q_pos = [
                    q1_theta - r[0].theta_offset,
                    q2_theta - r[1].theta_offset,
                    q3_theta - r[2].theta_offset,
                ];
                let t03 = self.forward_partial(&[q_pos[0], q_pos[1], q_pos[2], 0.0, 0.0, 0.0], 3);
                // M = R₀₃ᵀ R Rx(−α₆) = Rz(q₄) Ry(σ q₅) Rz(q₆)
                let r36: [[f64; 3]; 3] = std::array::from_fn(|i| {
                    std::array::from_fn(|j| (0..3).map(|k| t03.rotation[k][i] * rot[k][j]).sum())
                });
                let m: [[f64; 3]; 3] = std::array::from_fn(|i| {
                    [r36[i][0], r36[i][1] * ca6 + r36[i][2] * sa6, -r36[i][1] * sa6 + r36[i][2] * ca6]
                });
                let sigma = -r[3].alpha.sin();
                let sb_abs = m[0][2].hypot(m[1][2]);
                for wrist in [true, false] {
                    let (q4t, b, q6t) = if sb_abs < 1e-12 {
                        // Wrist singularity: only q₄ + q₆ (or q₄ − q₆) is
                        // determined; pin q₄ = 0.
                        let b = if m[2][2] > 0.0 { 0.0 } else { PI };
                        let psi = if b == 0.0 { m[1][0].atan2(m[0][0]) } else { (-m[1][0]).atan2(-m[0][0]) };
                        (0.0, b, psi)
                    } else if wrist {
                        (m[1][2].atan2(m[0][2]), sb_abs.atan2(m[2][2]), m[2][1].atan2(-m[2][0]))
                    } else {
                        ((-m[1][2]).atan2(-m[0][2]), (-sb_abs).atan2(m[2][2]), (-m[2][1]).atan2(m[2][0]))
                    };
                    let q5t = b / sigma;
                    let raw = [
                        q_pos[0],
                        q_pos[1],
                        q_pos[2],
                        q4t - r[3].theta_offset,
                        q5t - r[4].theta_offset,
                        q6t - r[5].theta_offset,
                    ];
                    let wrapped = JointConfig(raw.iter().map(|&a| wrap_angle(a)).collect());
                    let Some(candidate) = self.joint_limits.wrap_into(&wrapped) else {
                        continue;
                    };
                    if out.iter().all(|(_, s)| angular_distance(s, &candidate) > ANGLE_EPS) {
                        out.push((ArmIkBranch { shoulder, elbow, wrist }, candidate));
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_solvable_structure(&self) -> Result<(), KinematicsError> {
        let r = &self.dh_rows;
        let unsupported = |why: &str| Err(KinematicsError::InvalidModel(format!("closed-form IK unsupported: {why}")));
        if r.len() != 6 {
            return unsupported("need 6 rows");
        }
        if !self.wrist_axes_intersect() {
            return unsupported("wrist axes do not intersect");
        }
        if r[5].a.abs() > ANGLE_EPS {
            return unsupported("a₆ must be zero");
        }
        if (r[3].alpha.abs() - FRAC_PI_2).abs() > ANGLE_EPS || (r[3].alpha + r[4].alpha).abs() > ANGLE_EPS {
            return unsupported("wrist twists must be ±π/2 and opposite");
        }
        if r[1].alpha.abs() > ANGLE_EPS {
            return unsupported("joints 2 and 3 must be parallel");
        }
        if r[0].alpha.sin().abs() < 1e-6 {
            return unsupported("joint 1 must not be parallel to joint 2");
        }
        let (l1, l2, _) = self.positioning_links();
        if l1 < ANGLE_EPS || l2 < ANGLE_EPS {
            return unsupported("degenerate positioning links");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_q(rng: &mut ChaCha8Rng, limit: f64) -> JointConfig {
        JointConfig((0..6).map(|_| rng.gen_range(-limit..limit)).collect())
    }

    #[test]
    fn default_arm_is_valid() {
        ArmModel::default().validate().unwrap();
    }

    #[test]
    fn ik_recovers_generating_configuration() {
        let arm = ArmModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let q = random_q(&mut rng, 2.7);
            let pose = arm.fk(&q).unwrap();
            let sols = arm.ik_solutions(&pose).unwrap();
            assert!(!sols.is_empty());
            let best = sols.iter().map(|s| angular_distance(s, &q)).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6, "closest solution off by {best}");
            for s in &sols {
                let back = arm.fk(s).unwrap();
                assert!(super::super::position_error(&back, &pose).unwrap() < 1e-9);
                assert!(super::super::orientation_error(&back, &pose).unwrap() < 1e-6);
                assert!(arm.joint_limits.contains(s));
            }
        }
    }

    #[test]
    fn unreachable_wrist_center_has_no_solution() {
        let arm = ArmModel::default();
        let pose = Pose::spatial([2.0, 0.0, 0.3], super::super::Quaternion::IDENTITY);
        assert!(arm.ik_solutions(&pose).unwrap().is_empty());
    }

    #[test]
    fn generic_wrist_needs_flag() {
        let arm = ArmModel { spherical_wrist: false, ..ArmModel::default() };
        let pose = arm.fk(&JointConfig(vec![0.1; 6])).unwrap();
        assert!(matches!(arm.ik_solutions(&pose), Err(KinematicsError::NoSphericalWrist)));
    }

    #[test]
    fn branches_are_ordered() {
        let arm = ArmModel { joint_limits: JointLimits::symmetric(6, PI), ..ArmModel::default() };
        let q = JointConfig(vec![0.3, -0.4, 0.9, 0.5, 0.7, -0.2]);
        let b = arm.ik_branches(&arm.fk(&q).unwrap()).unwrap();
        assert_eq!(b.len(), 8);
        let keys: Vec<(bool, bool, bool)> = b.iter().map(|(k, _)| (!k.shoulder, !k.elbow, !k.wrist)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
