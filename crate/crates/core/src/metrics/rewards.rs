use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::kinematics::{Pose, RobotModel};
use crate::models::MlpParams;
use crate::samplers::{critic_inputs, encode_batch, reward, uniform_config, Sampler, SamplerKind, TaskDistribution};

/// (pose, configuration) pairs on which critics are compared with the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardProbe {
    pub poses: Vec<Pose>,
    pub actions: Vec<Vec<f64>>,
}

impl RewardProbe {
    /// Targets from `task` paired with uniformly drawn configurations.
    pub fn draw(model: &RobotModel, task: &TaskDistribution, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limits = model.joint_limits();
        let mut poses = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        for _ in 0..n {
            poses.push(task.draw(model, &mut rng));
            actions.push(uniform_config(&limits, &mut rng).0);
        }
        RewardProbe { poses, actions }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHistogram {
    pub epoch: usize,
    pub counts: Vec<usize>,
    /// Wasserstein-1 distance of the critic values from the analytic rewards.
    pub wasserstein: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardDistribution {
    pub bin_edges: Vec<f64>,
    pub analytic: Vec<usize>,
    pub checkpoints: Vec<CheckpointHistogram>,
}

pub fn critic_values(critic: &MlpParams, probe: &RewardProbe) -> Result<Vec<f64>, MetricsError> {
    let states = encode_batch(&probe.poses);
    let dof = probe.actions.first().map_or(0, Vec::len);
    let actions = Array2::from_shape_fn((probe.len(), dof), |(i, j)| probe.actions[i][j]);
    let out = critic.forward_batch(&critic_inputs(&states, &actions)).map_err(crate::samplers::SamplerError::from)?;
    Ok(out.output().column(0).to_vec())
}

/// Exact W₁ between two equally sized empirical distributions.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "samples must have equal size");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut counts = vec![0; bins];
    for &v in values {
        let t = ((v - lo) / (hi - lo) * bins as f64).floor();
        let i = if t.is_nan() { 0 } else { (t.max(0.0) as usize).min(bins - 1) };
        counts[i] += 1;
    }
    counts
}

/// Critic-value histograms of every stored snapshot against the analytic
/// reward histogram `−pose_distance²` on the probe set. Bins span the
/// analytic range; critic values outside it fall into the end bins.
pub fn critic_reward_distribution(
    sampler: &Sampler,
    probe: &RewardProbe,
    rotation_weight: f64,
    bins: usize,
) -> Result<RewardDistribution, MetricsError> {
    if sampler.kind != SamplerKind::Ddpg || sampler.critic_snapshots.is_empty() {
        return Err(MetricsError::Shape("needs an actor-critic sampler with critic snapshots".into()));
    }
    if probe.is_empty() || bins == 0 {
        return Err(MetricsError::Empty);
    }
    let analytic: Vec<f64> = probe
        .poses
        .iter()
        .zip(&probe.actions)
        .map(|(p, a)| reward(&sampler.model, a, p, rotation_weight))
        .collect();
    let lo = analytic.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = analytic.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(lo + 1e-12);
    let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    let mut checkpoints = Vec::with_capacity(sampler.critic_snapshots.len());
    for (epoch, critic) in &sampler.critic_snapshots {
        let q = critic_values(critic, probe)?;
        checkpoints.push(CheckpointHistogram {
            epoch: *epoch,
            counts: histogram(&q, &edges),
            wasserstein: wasserstein1(&q, &analytic),
        });
    }
    Ok(RewardDistribution { analytic: histogram(&analytic, &edges), bin_edges: edges, checkpoints })
}
