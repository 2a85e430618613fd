use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::kinematics::{orientation_error, JointConfig, Pose, RobotModel};
use crate::samplers::{position_error, uniform_config, Sampler, SamplerKind};

/// Orientation threshold logged next to the positional criterion (degrees).
pub const ORIENTATION_LOG_DEG: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyProtocol {
    pub position_tol: f64,
    pub attempt_cap: usize,
    pub seed: u64,
}

impl Default for AccuracyProtocol {
    fn default() -> Self {
        AccuracyProtocol { position_tol: 1e-3, attempt_cap: 300, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub success: bool,
    pub attempts: usize,
    /// Best positional error over the attempts (m).
    pub position_error: f64,
    /// Orientation error of the best attempt (degrees; 0 for planar).
    pub orientation_error_deg: f64,
    pub orientation_within_log_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub percentage: f64,
    pub targets: Vec<TargetOutcome>,
}

impl AccuracyReport {
    pub fn median_position_error(&self) -> f64 {
        let mut e: Vec<f64> = self.targets.iter().map(|t| t.position_error).collect();
        e.sort_by(f64::total_cmp);
        e.get(e.len() / 2).copied().unwrap_or(f64::NAN)
    }
}

/// Share of targets reached within `position_tol` with joints in limits.
///
/// Learned samplers get one deterministic attempt. The random baseline draws
/// up to `attempt_cap` uniform configurations. For a decoupled sampler an
/// attempt succeeds when the predicted base is in limits and the arm has an
/// IK solution from it.
pub fn accuracy_eval(sampler: &Sampler, targets: &[Pose], protocol: &AccuracyProtocol) -> Result<AccuracyReport, MetricsError> {
    if targets.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let model = &sampler.model;
    let limits = model.joint_limits();
    let mut outcomes = Vec::with_capacity(targets.len());
    for target in targets {
        let outcome = match sampler.kind {
            SamplerKind::Random => {
                let mut best: Option<(f64, JointConfig)> = None;
                let mut attempts = 0;
                for _ in 0..protocol.attempt_cap.max(1) {
                    attempts += 1;
                    let theta = uniform_config(&limits, &mut rng);
                    let e = position_error(model, &theta.0, target);
                    if best.as_ref().map_or(true, |(b, _)| e < *b) {
                        best = Some((e, theta));
                    }
                    if e <= protocol.position_tol {
                        break;
                    }
                }
                let (e, theta) = best.expect("at least one attempt");
                describe(model, &theta, target, e, e <= protocol.position_tol, attempts)?
            }
            SamplerKind::RobkinetDc => base_outcome(sampler, target, protocol, &mut rng)?,
            _ => {
                let theta = sampler.sample(target)?.expect("learned samplers always answer");
                let e = position_error(model, &theta.0, target);
                let ok = e <= protocol.position_tol && limits.contains(&theta);
                describe(model, &theta, target, e, ok, 1)?
            }
        };
        outcomes.push(outcome);
    }
    let hits = outcomes.iter().filter(|o| o.success).count();
    Ok(AccuracyReport { percentage: 100.0 * hits as f64 / targets.len() as f64, targets: outcomes })
}

/// Decoupled-control accuracy for any sampler on a mobile manipulator: an
/// attempt succeeds when its base pose `[ψ, x, y]` is within the base limits
/// and the arm has an IK solution from it. Learned samplers contribute their
/// first three outputs; the random baseline draws uniform base poses.
pub fn base_accuracy_eval(sampler: &Sampler, targets: &[Pose], protocol: &AccuracyProtocol) -> Result<AccuracyReport, MetricsError> {
    if targets.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let mut outcomes = Vec::with_capacity(targets.len());
    for target in targets {
        outcomes.push(base_outcome(sampler, target, protocol, &mut rng)?);
    }
    let hits = outcomes.iter().filter(|o| o.success).count();
    Ok(AccuracyReport { percentage: 100.0 * hits as f64 / targets.len() as f64, targets: outcomes })
}

fn base_outcome(
    sampler: &Sampler,
    target: &Pose,
    protocol: &AccuracyProtocol,
    rng: &mut ChaCha8Rng,
) -> Result<TargetOutcome, MetricsError> {
    let RobotModel::Ammr(ammr) = &sampler.model else {
        return Err(MetricsError::Shape("decoupled evaluation needs a mobile manipulator".into()));
    };
    let limits = &ammr.base.pose_limits;
    let mut attempts = 0;
    let mut ok = false;
    if sampler.kind == SamplerKind::Random {
        while attempts < protocol.attempt_cap.max(1) && !ok {
            attempts += 1;
            let base = uniform_config(limits, rng);
            ok = ammr.arm_ik_exists(&base.0, target)?;
        }
    } else {
        attempts = 1;
        let full = sampler.predict_full(target)?;
        let base = JointConfig(full.0[..3].to_vec());
        ok = limits.contains(&base) && ammr.arm_ik_exists(&base.0, target)?;
    }
    Ok(TargetOutcome {
        success: ok,
        attempts,
        position_error: if ok { 0.0 } else { f64::INFINITY },
        orientation_error_deg: 0.0,
        orientation_within_log_threshold: ok,
    })
}

fn describe(
    model: &RobotModel,
    theta: &JointConfig,
    target: &Pose,
    position_error: f64,
    success: bool,
    attempts: usize,
) -> Result<TargetOutcome, MetricsError> {
    let reached = model.fk(theta)?;
    let deg = orientation_error(&reached, target)?.to_degrees();
    Ok(TargetOutcome {
        success,
        attempts,
        position_error,
        orientation_error_deg: deg,
        orientation_within_log_threshold: deg <= ORIENTATION_LOG_DEG,
    })
}
