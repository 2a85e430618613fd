use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::task::{encode_batch, pose_error};
use super::{ReplayBuffer, Sampler, SamplerError, TrainConfig, TrainReport};
use crate::kinematics::{Pose, RobotModel};
use crate::metrics::{drp_percent, epochs_to_drp, pca_explained, GradientMatrix};
use crate::models::{Adam, LayerGradients, MlpDocument, MlpParams};

/// Generator for epoch `epoch` of a run seeded with `seed`. Stream 0 is
/// reserved for initialization, so resuming at any epoch replays the same
/// draws as an uninterrupted run.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    rng
}

/// Network parameters with their optimizer state.
#[derive(Debug, Clone)]
pub struct Learner {
    pub params: MlpParams,
    pub adam: Adam,
}

impl Learner {
    pub fn new(params: MlpParams, config: &TrainConfig) -> Self {
        let n = params.param_count();
        Learner { params, adam: Adam::new(config.adam, n) }
    }

    pub fn step(&mut self, grads: &LayerGradients, lr: f64) {
        self.adam.step(&mut self.params, grads, lr);
    }
}

/// Fixed held-out targets.
#[derive(Debug, Clone)]
pub struct Validation {
    pub targets: Vec<Pose>,
    pub inputs: Array2<f64>,
}

impl Validation {
    pub fn new(model: &RobotModel, config: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.validation_seed);
        let targets = config.task.draw_many(model, config.validation_size, &mut rng);
        let inputs = encode_batch(&targets);
        Validation { targets, inputs }
    }

    pub fn predict(&self, params: &MlpParams) -> Result<Array2<f64>, SamplerError> {
        Ok(params.forward_batch(&self.inputs)?.output().clone())
    }

    /// Per-target pose distance of `FK(net(pose))` from the pose.
    pub fn distances(&self, model: &RobotModel, predictions: &Array2<f64>, rotation_weight: f64) -> Vec<f64> {
        self.targets
            .iter()
            .zip(predictions.rows())
            .map(|(t, row)| pose_error(model, &row.to_vec(), t, rotation_weight))
            .collect()
    }
}

pub fn fk_position(model: &RobotModel, theta: &[f64]) -> [f64; 3] {
    match model {
        RobotModel::Planar(c) => {
            let [x, y] = c.forward(theta);
            [x, y, 0.0]
        }
        RobotModel::Ammr(m) => m.forward(theta).translation,
    }
}

/// Bookkeeping shared by every trainer.
#[derive(Debug, Clone)]
pub struct EpochLog {
    started: Instant,
    loss_sum: f64,
    batches: usize,
    grads: Option<LayerGradients>,
}

impl EpochLog {
    pub fn start() -> Self {
        EpochLog { started: Instant::now(), loss_sum: 0.0, batches: 0, grads: None }
    }

    pub fn batch(&mut self, epoch: usize, loss: f64, grads: &LayerGradients) -> Result<(), SamplerError> {
        if !loss.is_finite() || !grads.is_finite() {
            return Err(SamplerError::Divergence { epoch, loss });
        }
        self.loss_sum += loss;
        self.batches += 1;
        match &mut self.grads {
            Some(acc) => acc.add_scaled(grads, 1.0),
            None => self.grads = Some(grads.clone()),
        }
        Ok(())
    }

    /// Appends the epoch to `report`, evaluating `params` on `validation`.
    pub fn finish(
        self,
        report: &mut TrainReport,
        model: &RobotModel,
        validation: &Validation,
        params: &MlpParams,
    ) -> Result<Array2<f64>, SamplerError> {
        let config = report.config.clone();
        let predictions = validation.predict(params)?;
        let distances = validation.distances(model, &predictions, config.rotation_weight);
        let mean = distances.iter().sum::<f64>() / distances.len() as f64;
        let epoch = report.epochs();
        if !mean.is_finite() {
            return Err(SamplerError::Divergence { epoch, loss: mean });
        }
        report.epoch_loss.push(self.loss_sum / self.batches.max(1) as f64);
        report.val_distance.push(mean);
        report.drp.push(drp_percent(report.initial_distance, mean).expect("initial distance checked positive"));
        if config.record_gradients {
            let mut g = self.grads.expect("at least one batch per epoch");
            g.scale(1.0 / self.batches as f64);
            let columns = GradientMatrix::from_columns(&g.layer_vectors())?;
            report.explained_variance.push(pca_explained(&columns)?.ratios);
        }
        if config.log_per_target {
            report.per_target_distance.push(distances);
        }
        report.traces.push(traces(model, &predictions, config.trace_count));
        report.epoch_seconds.push(self.started.elapsed().as_secs_f64());
        Ok(predictions)
    }
}

pub fn traces(model: &RobotModel, predictions: &Array2<f64>, count: usize) -> Vec<[f64; 3]> {
    predictions.rows().into_iter().take(count).map(|r| fk_position(model, &r.to_vec())).collect()
}

/// Opens a report at the untrained network's validation distance.
pub fn initial_report(
    method: &str,
    model: &RobotModel,
    config: &TrainConfig,
    validation: &Validation,
    params: &MlpParams,
) -> Result<TrainReport, SamplerError> {
    let predictions = validation.predict(params)?;
    let distances = validation.distances(model, &predictions, config.rotation_weight);
    let d0 = distances.iter().sum::<f64>() / distances.len() as f64;
    if !(d0 > 0.0) || !d0.is_finite() {
        return Err(SamplerError::Config(format!("initial validation distance {d0} is not positive")));
    }
    let mut report = TrainReport::new(method, config, d0);
    report.trace_targets = validation.targets.iter().take(config.trace_count).map(|t| t.position()).collect();
    report.traces.push(traces(model, &predictions, config.trace_count));
    if config.log_per_target {
        report.per_target_distance.push(distances);
    }
    Ok(report)
}

/// A resumable training run.
pub trait Trainer {
    fn report(&self) -> &TrainReport;
    fn run_epoch(&mut self) -> Result<(), SamplerError>;
    fn checkpoint(&self) -> Checkpoint;
    fn sampler(&self) -> Sampler;

    fn epochs_done(&self) -> usize {
        self.report().epochs()
    }

    /// True once the configured epoch count is done, or once `stop_at_drp`
    /// has been reached and held.
    fn finished(&self) -> bool {
        let report = self.report();
        if report.epochs() >= report.config.epochs {
            return true;
        }
        report.config.stop_at_drp.is_some_and(|t| epochs_to_drp(&report.drp, t).is_some())
    }

    fn run(&mut self) -> Result<(), SamplerError> {
        while !self.finished() {
            self.run_epoch()?;
        }
        Ok(())
    }
}

/// Everything needed to continue a run bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub method: String,
    pub actor: MlpDocument,
    pub adam: Adam,
    pub report: TrainReport,
    pub ddpg: Option<DdpgState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DdpgState {
    pub critic: MlpDocument,
    pub critic_adam: Adam,
    pub target_actor: MlpDocument,
    pub target_critic: MlpDocument,
    pub buffer: ReplayBuffer,
    pub snapshots: Vec<(usize, MlpDocument)>,
}
