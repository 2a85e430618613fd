use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{SamplerError, TaskDistribution};
use crate::kinematics::DEFAULT_ROTATION_WEIGHT;
use crate::models::AdamConfig;

/// Seed of the held-out validation targets shared by every method and run.
pub const VALIDATION_SEED: u64 = 0x5eed_0256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleProfile {
    Desk,
    Paper,
}

/// Learning-rate multiplier over the planned optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from 1 to `floor`.
    Cosine { floor: f64 },
}

impl LrSchedule {
    pub fn factor(&self, step: usize, total: usize) -> f64 {
        match *self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine { floor } => {
                let frac = (step as f64 / total.max(1) as f64).min(1.0);
                floor + (1.0 - floor) * 0.5 * (1.0 + (PI * frac).cos())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdpgConfig {
    /// Exploration noise standard deviation, as a fraction of each joint's
    /// half range.
    pub noise_sigma: f64,
    pub tau: f64,
    /// Weight of the bootstrapped target term; the episodes have one step so
    /// the default is 0.
    pub gamma: f64,
    pub initial_buffer: usize,
    pub buffer_capacity: usize,
    pub resample_per_epoch: usize,
    pub critic_learning_rate: f64,
    pub critic_hidden: Vec<usize>,
    /// Critic snapshots are kept every this many epochs (and at epoch 0).
    pub snapshot_every: usize,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        DdpgConfig {
            noise_sigma: 0.2,
            tau: 0.01,
            gamma: 0.0,
            initial_buffer: 2000,
            buffer_capacity: 20_000,
            resample_per_epoch: 128,
            critic_learning_rate: 3e-3,
            critic_hidden: vec![128, 128],
            snapshot_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    pub seed: u64,
    pub adam: AdamConfig,
    pub rotation_weight: f64,
    pub validation_size: usize,
    pub validation_seed: u64,
    /// Record the explained-variance spectrum of every epoch's gradient
    /// matrix.
    pub record_gradients: bool,
    /// Keep per-target validation distances for every epoch.
    pub log_per_target: bool,
    /// Number of validation targets whose FK(prediction) is traced per epoch.
    pub trace_count: usize,
    /// Stop once this DRP (percent) has held for three consecutive epochs.
    pub stop_at_drp: Option<f64>,
    pub task: TaskDistribution,
    pub ddpg: DdpgConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batches_per_epoch: 32,
            batch_size: 128,
            learning_rate: 2e-3,
            lr_schedule: LrSchedule::Constant,
            seed: 0,
            adam: AdamConfig::default(),
            rotation_weight: DEFAULT_ROTATION_WEIGHT,
            validation_size: 256,
            validation_seed: VALIDATION_SEED,
            record_gradients: true,
            log_per_target: false,
            trace_count: 4,
            stop_at_drp: None,
            task: TaskDistribution::FkUniform,
            ddpg: DdpgConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn for_profile(profile: ScaleProfile) -> Self {
        match profile {
            ScaleProfile::Desk => TrainConfig::default(),
            ScaleProfile::Paper => TrainConfig {
                epochs: 1000,
                ddpg: DdpgConfig {
                    initial_buffer: 20_000,
                    buffer_capacity: 200_000,
                    resample_per_epoch: 512,
                    ..DdpgConfig::default()
                },
                ..TrainConfig::default()
            },
        }
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.batches_per_epoch
    }

    pub fn learning_rate_at(&self, step: usize) -> f64 {
        self.learning_rate * self.lr_schedule.factor(step, self.total_steps())
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |what: &str| Err(SamplerError::Config(format!("{what} must be positive")));
        if self.epochs == 0 {
            return bad("epochs");
        }
        if self.batches_per_epoch == 0 {
            return bad("batches_per_epoch");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate");
        }
        if self.validation_size == 0 {
            return bad("validation_size");
        }
        if !(self.rotation_weight >= 0.0) {
            return Err(SamplerError::Config("rotation_weight must be nonnegative".into()));
        }
        let d = &self.ddpg;
        if !(d.noise_sigma >= 0.0) || !(d.tau > 0.0 && d.tau <= 1.0) || !(d.gamma >= 0.0 && d.gamma < 1.0) {
            return Err(SamplerError::Config("ddpg noise/tau/gamma out of range".into()));
        }
        if d.buffer_capacity == 0 || d.initial_buffer > d.buffer_capacity || d.snapshot_every == 0 {
            return Err(SamplerError::Config("ddpg buffer sizes or snapshot interval invalid".into()));
        }
        if !(d.critic_learning_rate > 0.0) {
            return bad("ddpg.critic_learning_rate");
        }
        self.task.validate()
    }
}

/// Per-epoch training record.
///
/// `val_distance`, `drp` and `epoch_loss` hold one entry per trained epoch;
/// `initial_distance` is the validation distance of the untrained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub method: String,
    pub seed: u64,
    pub config: TrainConfig,
    pub initial_distance: f64,
    pub epoch_loss: Vec<f64>,
    pub val_distance: Vec<f64>,
    pub drp: Vec<f64>,
    /// Explained-variance ratios of epoch `e`'s gradient matrix, whose
    /// column `k` is the mean over the epoch's batches of the layer-`k`
    /// weight and bias gradients.
    pub explained_variance: Vec<Vec<f64>>,
    pub per_target_distance: Vec<Vec<f64>>,
    /// FK position of the prediction for each traced target, per epoch
    /// (entry 0 is the untrained network).
    pub traces: Vec<Vec<[f64; 3]>>,
    pub trace_targets: Vec<[f64; 3]>,
    /// Fraction of validation targets with an arm IK solution from the
    /// predicted base (decoupled control only).
    pub ik_existence: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
}

impl TrainReport {
    pub fn new(method: &str, config: &TrainConfig, initial_distance: f64) -> Self {
        TrainReport {
            method: method.to_string(),
            seed: config.seed,
            config: config.clone(),
            initial_distance,
            epoch_loss: Vec::new(),
            val_distance: Vec::new(),
            drp: Vec::new(),
            explained_variance: Vec::new(),
            per_target_distance: Vec::new(),
            traces: Vec::new(),
            trace_targets: Vec::new(),
            ik_existence: Vec::new(),
            epoch_seconds: Vec::new(),
        }
    }

    pub fn epochs(&self) -> usize {
        self.epoch_loss.len()
    }

    pub fn final_distance(&self) -> f64 {
        self.val_distance.last().copied().unwrap_or(self.initial_distance)
    }

    /// Copy with wall-clock times cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> TrainReport {
        TrainReport { epoch_seconds: Vec::new(), ..self.clone() }
    }
}
