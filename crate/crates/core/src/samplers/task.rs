use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::autodiff::{smooth_norm, Real, Tape};
use crate::kinematics::{rotation_angle, JointConfig, JointLimits, Pose, RobotModel};

/// Where training and evaluation targets come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskDistribution {
    /// FK of joint configurations drawn uniformly within the limits.
    FkUniform,
    /// Uniform choice from a fixed list.
    Fixed { targets: Vec<Pose> },
}

impl TaskDistribution {
    pub fn draw(&self, model: &RobotModel, rng: &mut ChaCha8Rng) -> Pose {
        match self {
            TaskDistribution::FkUniform => {
                let theta = uniform_config(&model.joint_limits(), rng);
                model.fk(&theta).expect("dimension matches the model")
            }
            TaskDistribution::Fixed { targets } => targets[rng.gen_range(0..targets.len())],
        }
    }

    pub fn draw_many(&self, model: &RobotModel, n: usize, rng: &mut ChaCha8Rng) -> Vec<Pose> {
        (0..n).map(|_| self.draw(model, rng)).collect()
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        match self {
            TaskDistribution::Fixed { targets } if targets.is_empty() => {
                Err(SamplerError::Config("fixed task distribution has no targets".into()))
            }
            _ => Ok(()),
        }
    }
}

pub fn uniform_config(limits: &JointLimits, rng: &mut ChaCha8Rng) -> JointConfig {
    JointConfig(limits.lower.iter().zip(&limits.upper).map(|(&lo, &hi)| rng.gen_range(lo..=hi)).collect())
}

/// Network input length for poses of this model.
pub fn encoding_size(model: &RobotModel) -> usize {
    if model.is_planar() {
        2
    } else {
        9
    }
}

/// Planar: `(x, y)`. Spatial: position followed by the first two columns of
/// the rotation matrix, which is continuous over SO(3) unlike a quaternion.
pub fn encode_pose(pose: &Pose) -> Vec<f64> {
    match pose {
        Pose::Planar { x, y } => vec![*x, *y],
        Pose::Spatial { position, orientation } => {
            let r = orientation.to_rotation_matrix();
            let mut v = position.to_vec();
            v.extend([r[0][0], r[1][0], r[2][0], r[0][1], r[1][1], r[2][1]]);
            v
        }
    }
}

pub fn encode_batch(poses: &[Pose]) -> Array2<f64> {
    let width = poses.first().map(|p| encode_pose(p).len()).unwrap_or(0);
    let mut out = Array2::zeros((poses.len(), width));
    for (mut row, p) in out.rows_mut().into_iter().zip(poses) {
        row.iter_mut().zip(encode_pose(p)).for_each(|(dst, v)| *dst = v);
    }
    out
}

/// Squared pose distance between `FK(θ)` and `target`, differentiable in `θ`.
///
/// Planar: squared Euclidean distance. Spatial:
/// `(‖Δp‖ + rotation_weight · angle)²`.
pub fn pose_loss<T: Real>(model: &RobotModel, theta: &[T], target: &Pose, rotation_weight: f64) -> T {
    match (model, target) {
        (RobotModel::Planar(chain), Pose::Planar { x, y }) => {
            let [px, py] = chain.forward(theta);
            (px - *x).square() + (py - *y).square()
        }
        (RobotModel::Ammr(m), Pose::Spatial { position, orientation }) => {
            let t = m.forward(theta);
            let dp: [T; 3] = std::array::from_fn(|i| t.translation[i] - position[i]);
            let angle = rotation_angle(&t.rotation, &orientation.to_rotation_matrix());
            (smooth_norm(&dp) + angle * rotation_weight).square()
        }
        _ => panic!("target variant does not match the robot model"),
    }
}

/// Pose distance of `FK(θ)` from `target`.
pub fn pose_error(model: &RobotModel, theta: &[f64], target: &Pose, rotation_weight: f64) -> f64 {
    pose_loss(model, theta, target, rotation_weight).sqrt()
}

/// Position-only error of `FK(θ)`.
pub fn position_error(model: &RobotModel, theta: &[f64], target: &Pose) -> f64 {
    match (model, target) {
        (RobotModel::Planar(_), _) => pose_error(model, theta, target, 0.0),
        (RobotModel::Ammr(m), Pose::Spatial { position, .. }) => {
            let p = m.forward(theta).translation;
            (0..3).map(|i| (p[i] - position[i]).powi(2)).sum::<f64>().sqrt()
        }
        _ => panic!("target variant does not match the robot model"),
    }
}

/// Mean of [`pose_loss`] over a batch and its gradient with respect to every
/// configuration row; each row is differentiated on its own tape.
pub fn batch_pose_loss(
    model: &RobotModel,
    thetas: &Array2<f64>,
    targets: &[Pose],
    rotation_weight: f64,
) -> Result<(f64, Array2<f64>), SamplerError> {
    let n = targets.len();
    let mut grad = Array2::zeros(thetas.raw_dim());
    let mut total = 0.0;
    for (i, target) in targets.iter().enumerate() {
        let tape = Tape::new();
        let row: Vec<f64> = thetas.row(i).to_vec();
        let vars = tape.lift_all(&row)?;
        let loss = pose_loss(model, &vars, target, rotation_weight);
        let g = tape.backward(loss)?;
        total += loss.value();
        for (j, v) in vars.iter().enumerate() {
            grad[[i, j]] = g.wrt(*v) / n as f64;
        }
    }
    Ok((total / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{AmmrModel, PlanarChain, Quaternion};
    use rand::SeedableRng;

    #[test]
    fn planar_loss_is_squared_distance() {
        let model = RobotModel::Planar(PlanarChain::default());
        let l = pose_loss(&model, &[0.0, 0.0], &Pose::planar(2.0, 1.0), 0.1);
        assert!((l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spatial_loss_vanishes_at_fk() {
        let model = RobotModel::Ammr(AmmrModel::default());
        let theta = JointConfig(vec![0.3, 0.5, -0.2, 0.1, 0.8, -0.4, 0.6, 1.0, 0.2]);
        let target = model.fk(&theta).unwrap();
        assert!(pose_loss(&model, &theta.0, &target, 0.1) < 1e-20);
        let moved = Pose::spatial([target.position()[0] + 0.03, target.position()[1], target.position()[2]], match target {
            Pose::Spatial { orientation, .. } => orientation,
            _ => Quaternion::IDENTITY,
        });
        assert!((pose_error(&model, &theta.0, &moved, 0.1) - 0.03).abs() < 1e-9);
    }

    #[test]
    fn encoding_sizes_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for model in [RobotModel::Planar(PlanarChain::default()), RobotModel::Ammr(AmmrModel::default())] {
            let p = TaskDistribution::FkUniform.draw(&model, &mut rng);
            assert_eq!(encode_pose(&p).len(), encoding_size(&model));
        }
    }
}
