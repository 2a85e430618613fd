//! Configuration samplers: the kinematics-informed network (whole-body and
//! decoupled variants), a supervised regressor, a one-step actor-critic and
//! rejection sampling.
//!
//! Every learned sampler squashes its outputs into the joint limits, so the
//! inequality constraints hold by construction; only the pose constraint is
//! learned.

mod ann;
mod buffer;
mod config;
mod dataset;
mod ddpg;
mod robkinet;
mod task;
mod trainer;

pub use ann::{train_ann, AnnTrainer};
pub use buffer::{ReplayBuffer, Transition};
pub use config::{DdpgConfig, LrSchedule, ScaleProfile, TrainConfig, TrainReport, VALIDATION_SEED};
pub use dataset::{gen_dataset, Dataset, Pair};
pub use ddpg::{critic_inputs, critic_spec, reward, train_ddpg, DdpgTrainer};
pub use robkinet::{robkinet_loss, robkinet_loss_gradient, train_robkinet, train_robkinet_dc, ControlMode, RobKiNetTrainer};
pub use task::{
    batch_pose_loss, encode_batch, encode_pose, encoding_size, pose_error, pose_loss, position_error, uniform_config,
    TaskDistribution,
};
pub use trainer::{epoch_rng, Checkpoint, DdpgState, Trainer, Validation};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::kinematics::{in_cfs, robot_hash, JointConfig, KinematicsError, Pose, RobotModel};
use crate::models::{MlpParams, ModelError};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("metrics: {0}")]
    Metrics(Box<crate::metrics::MetricsError>),
}

impl From<crate::metrics::MetricsError> for SamplerError {
    fn from(e: crate::metrics::MetricsError) -> Self {
        SamplerError::Metrics(Box::new(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Random,
    Ann,
    Ddpg,
    RobkinetWbc,
    RobkinetDc,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Ann => "ann",
            SamplerKind::Ddpg => "ddpg",
            SamplerKind::RobkinetWbc => "robkinet_wbc",
            SamplerKind::RobkinetDc => "robkinet_dc",
        }
    }
}

/// Acceptance rule of the random baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSearch {
    pub tol: f64,
    pub budget: usize,
    pub seed: u64,
}

impl Default for RandomSearch {
    fn default() -> Self {
        RandomSearch { tol: 1e-3, budget: 300, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub model: RobotModel,
    pub params: Option<MlpParams>,
    pub critic: Option<MlpParams>,
    pub critic_snapshots: Vec<(usize, MlpParams)>,
    pub random: RandomSearch,
}

impl Sampler {
    pub fn random(model: RobotModel, search: RandomSearch) -> Sampler {
        Sampler { kind: SamplerKind::Random, model, params: None, critic: None, critic_snapshots: Vec::new(), random: search }
    }

    pub fn learned(kind: SamplerKind, model: RobotModel, params: MlpParams) -> Sampler {
        Sampler {
            kind,
            model,
            params: Some(params),
            critic: None,
            critic_snapshots: Vec::new(),
            random: RandomSearch::default(),
        }
    }

    pub fn is_learned(&self) -> bool {
        self.kind != SamplerKind::Random
    }

    /// Output dimension: 2 planar, 9 whole-body, 3 for a decoupled base.
    pub fn output_dim(&self) -> usize {
        match self.kind {
            SamplerKind::RobkinetDc => 3,
            _ => self.model.dof(),
        }
    }

    /// Full network output, before the decoupled variant drops the arm head.
    pub fn predict_full(&self, target: &Pose) -> Result<JointConfig, SamplerError> {
        let params = self.params.as_ref().ok_or_else(|| SamplerError::Config("sampler has no trained network".into()))?;
        Ok(JointConfig(params.forward(&encode_pose(target))?))
    }

    /// One configuration for `target`; `None` when the random baseline
    /// exhausts its budget. Random draws come from the sampler's own seed.
    pub fn sample(&self, target: &Pose) -> Result<Option<JointConfig>, SamplerError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.random.seed);
        self.sample_with(target, &mut rng)
    }

    pub fn sample_with(&self, target: &Pose, rng: &mut ChaCha8Rng) -> Result<Option<JointConfig>, SamplerError> {
        match self.kind {
            SamplerKind::Random => sample_random(&self.model, target, self.random.tol, self.random.budget, rng),
            SamplerKind::RobkinetDc => {
                let full = self.predict_full(target)?;
                Ok(Some(JointConfig(full.0[..3].to_vec())))
            }
            _ => Ok(Some(self.predict_full(target)?)),
        }
    }

    pub fn manifest(&self, config: Option<&TrainConfig>, weights_file: Option<&str>) -> SamplerManifest {
        SamplerManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            kind: self.kind,
            robot_hash: robot_hash(&self.model),
            seed: config.map(|c| c.seed).unwrap_or(self.random.seed),
            config: config.cloned(),
            random: (self.kind == SamplerKind::Random).then_some(self.random),
            weights: weights_file.map(str::to_string),
        }
    }
}

pub const MANIFEST_SCHEMA: &str = "kinform-sampler/1";

/// Sidecar describing a persisted sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerManifest {
    pub schema: String,
    pub kind: SamplerKind,
    pub robot_hash: String,
    pub seed: u64,
    pub config: Option<TrainConfig>,
    pub random: Option<RandomSearch>,
    pub weights: Option<String>,
}

/// Rejection sampling: uniform draws within the limits until one lands in
/// the CFS at tolerance `tol`, for at most `budget` draws.
pub fn sample_random(
    model: &RobotModel,
    target: &Pose,
    tol: f64,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<JointConfig>, SamplerError> {
    if budget == 0 {
        return Err(SamplerError::Config("random sampling budget must be at least 1".into()));
    }
    let limits = model.joint_limits();
    for _ in 0..budget {
        let theta = uniform_config(&limits, rng);
        if in_cfs(model, &theta, target, tol)? {
            return Ok(Some(theta));
        }
    }
    Ok(None)
}
