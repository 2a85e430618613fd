//! Self-supervised training through the differentiable forward kinematics.
//!
//! The trainer never sees a joint-space label: each batch is a set of pose
//! targets, the network proposes configurations, and the loss is the squared
//! pose distance of their forward kinematics from the targets.

use ndarray::s;
use serde::{Deserialize, Serialize};

use super::task::{batch_pose_loss, encode_batch, encode_pose, encoding_size, pose_loss};
use super::trainer::{epoch_rng, initial_report, Checkpoint, EpochLog, Learner, Trainer, Validation};
use super::{Sampler, SamplerError, SamplerKind, TrainConfig, TrainReport};
use crate::kinematics::{AmmrModel, Pose, RobotModel};
use crate::models::{MlpParams, MlpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Two-link planar arm.
    Planar,
    /// Whole-body control: all nine mobile-manipulator coordinates.
    Wbc,
    /// Decoupled control: trained like `Wbc`, but only the base head is used.
    Dc,
}

impl ControlMode {
    pub fn method_name(self) -> &'static str {
        match self {
            ControlMode::Planar | ControlMode::Wbc => "robkinet",
            ControlMode::Dc => "robkinet_dc",
        }
    }
}

pub struct RobKiNetTrainer {
    model: RobotModel,
    mode: ControlMode,
    learner: Learner,
    validation: Validation,
    report: TrainReport,
}

impl RobKiNetTrainer {
    pub fn new(model: &RobotModel, spec: &MlpSpec, config: &TrainConfig, mode: ControlMode) -> Result<Self, SamplerError> {
        config.validate()?;
        check_spec(model, spec, mode)?;
        let params = MlpParams::init(spec, config.seed)?;
        let validation = Validation::new(model, config);
        let report = initial_report(mode.method_name(), model, config, &validation, &params)?;
        let learner = Learner::new(params, config);
        Ok(RobKiNetTrainer { model: model.clone(), mode, learner, validation, report })
    }

    pub fn resume(model: &RobotModel, mode: ControlMode, checkpoint: Checkpoint) -> Result<Self, SamplerError> {
        let params = MlpParams::from_document(checkpoint.actor)?;
        check_spec(model, &params.spec, mode)?;
        let validation = Validation::new(model, &checkpoint.report.config);
        Ok(RobKiNetTrainer {
            model: model.clone(),
            mode,
            learner: Learner { params, adam: checkpoint.adam },
            validation,
            report: checkpoint.report,
        })
    }

    pub fn params(&self) -> &MlpParams {
        &self.learner.params
    }

    /// Fraction of validation targets for which the arm has an IK solution
    /// from the base pose the network predicts.
    pub fn ik_existence_rate(&self) -> Result<f64, SamplerError> {
        let RobotModel::Ammr(ammr) = &self.model else {
            return Err(SamplerError::Config("IK existence needs a mobile manipulator".into()));
        };
        let predictions = self.validation.predict(&self.learner.params)?;
        ik_existence(ammr, &self.validation.targets, &predictions.slice(s![.., 0..3]).to_owned())
    }
}

pub(crate) fn ik_existence(
    ammr: &AmmrModel,
    targets: &[Pose],
    bases: &ndarray::Array2<f64>,
) -> Result<f64, SamplerError> {
    let mut hits = 0usize;
    for (t, b) in targets.iter().zip(bases.rows()) {
        if ammr.arm_ik_exists(&b.to_vec(), t)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / targets.len() as f64)
}

fn check_spec(model: &RobotModel, spec: &MlpSpec, mode: ControlMode) -> Result<(), SamplerError> {
    match (mode, model) {
        (ControlMode::Planar, RobotModel::Planar(_)) => {}
        (ControlMode::Wbc | ControlMode::Dc, RobotModel::Ammr(_)) => {}
        _ => return Err(SamplerError::Config(format!("{mode:?} control does not fit this robot model"))),
    }
    if spec.input_size() != encoding_size(model) {
        return Err(SamplerError::Config(format!(
            "network input {} does not match pose encoding {}",
            spec.input_size(),
            encoding_size(model)
        )));
    }
    if spec.output_size() != model.dof() {
        return Err(SamplerError::Config(format!(
            "network output {} does not match configuration dimension {}",
            spec.output_size(),
            model.dof()
        )));
    }
    Ok(())
}

impl Trainer for RobKiNetTrainer {
    fn report(&self) -> &TrainReport {
        &self.report
    }

    fn run_epoch(&mut self) -> Result<(), SamplerError> {
        let config = self.report.config.clone();
        let epoch = self.report.epochs();
        let mut rng = epoch_rng(config.seed, epoch);
        let mut log = EpochLog::start();
        for b in 0..config.batches_per_epoch {
            let targets = config.task.draw_many(&self.model, config.batch_size, &mut rng);
            let inputs = encode_batch(&targets);
            let cache = self.learner.params.forward_batch(&inputs)?;
            let (loss, d_theta) = batch_pose_loss(&self.model, cache.output(), &targets, config.rotation_weight)?;
            let (grads, _) = self.learner.params.backward_batch(&cache, &d_theta);
            log.batch(epoch + 1, loss, &grads)?;
            self.learner.step(&grads, config.learning_rate_at(epoch * config.batches_per_epoch + b));
        }
        log.finish(&mut self.report, &self.model, &self.validation, &self.learner.params)?;
        if self.mode == ControlMode::Dc {
            let rate = self.ik_existence_rate()?;
            self.report.ik_existence.push(rate);
        }
        Ok(())
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            method: self.report.method.clone(),
            actor: self.learner.params.to_document(),
            adam: self.learner.adam.clone(),
            report: self.report.clone(),
            ddpg: None,
        }
    }

    fn sampler(&self) -> Sampler {
        let kind = match self.mode {
            ControlMode::Planar | ControlMode::Wbc => SamplerKind::RobkinetWbc,
            ControlMode::Dc => SamplerKind::RobkinetDc,
        };
        Sampler::learned(kind, self.model.clone(), self.learner.params.clone())
    }
}

/// Mean pose loss of `params` over `targets`, through the plain forward pass.
pub fn robkinet_loss(model: &RobotModel, params: &MlpParams, targets: &[Pose], rotation_weight: f64) -> Result<f64, SamplerError> {
    let mut total = 0.0;
    for t in targets {
        let theta = params.forward(&encode_pose(t))?;
        total += pose_loss(model, &theta, t, rotation_weight);
    }
    Ok(total / targets.len() as f64)
}

/// [`robkinet_loss`] and its gradient with respect to every network
/// parameter, in [`MlpParams::to_flat`] order, as the trainer computes it.
pub fn robkinet_loss_gradient(
    model: &RobotModel,
    params: &MlpParams,
    targets: &[Pose],
    rotation_weight: f64,
) -> Result<(f64, Vec<f64>), SamplerError> {
    let cache = params.forward_batch(&encode_batch(targets))?;
    let (loss, d_theta) = batch_pose_loss(model, cache.output(), targets, rotation_weight)?;
    let (grads, _) = params.backward_batch(&cache, &d_theta);
    Ok((loss, grads.to_flat()))
}

/// Trains a planar or whole-body sampler.
pub fn train_robkinet(
    model: &RobotModel,
    spec: &MlpSpec,
    config: &TrainConfig,
    mode: ControlMode,
) -> Result<(Sampler, TrainReport), SamplerError> {
    if mode == ControlMode::Dc {
        return Err(SamplerError::Config("use train_robkinet_dc for decoupled control".into()));
    }
    let mut trainer = RobKiNetTrainer::new(model, spec, config, mode)?;
    trainer.run()?;
    Ok((trainer.sampler(), trainer.report))
}

/// Trains the nine-output network and returns a base-only sampler.
pub fn train_robkinet_dc(
    model: &AmmrModel,
    spec: &MlpSpec,
    config: &TrainConfig,
) -> Result<(Sampler, TrainReport), SamplerError> {
    let model = RobotModel::Ammr(model.clone());
    let mut trainer = RobKiNetTrainer::new(&model, spec, config, ControlMode::Dc)?;
    trainer.run()?;
    Ok((trainer.sampler(), trainer.report))
}
