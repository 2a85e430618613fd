use ndarray::Array2;
use rand::seq::SliceRandom;

use super::task::{encode_pose, encoding_size};
use super::trainer::{epoch_rng, initial_report, Checkpoint, EpochLog, Learner, Trainer, Validation};
use super::{Dataset, Sampler, SamplerError, SamplerKind, TrainConfig, TrainReport};
use crate::kinematics::RobotModel;
use crate::models::{MlpParams, MlpSpec};

/// Supervised regression onto dataset configurations.
pub struct AnnTrainer {
    model: RobotModel,
    inputs: Array2<f64>,
    labels: Array2<f64>,
    learner: Learner,
    validation: Validation,
    report: TrainReport,
}

impl AnnTrainer {
    pub fn new(model: &RobotModel, dataset: &Dataset, spec: &MlpSpec, config: &TrainConfig) -> Result<Self, SamplerError> {
        config.validate()?;
        let (inputs, labels) = tabulate(model, dataset, spec)?;
        let params = MlpParams::init(spec, config.seed)?;
        let validation = Validation::new(model, config);
        let report = initial_report("ann", model, config, &validation, &params)?;
        let learner = Learner::new(params, config);
        Ok(AnnTrainer { model: model.clone(), inputs, labels, learner, validation, report })
    }

    pub fn resume(model: &RobotModel, dataset: &Dataset, checkpoint: Checkpoint) -> Result<Self, SamplerError> {
        let params = MlpParams::from_document(checkpoint.actor)?;
        let (inputs, labels) = tabulate(model, dataset, &params.spec)?;
        let validation = Validation::new(model, &checkpoint.report.config);
        Ok(AnnTrainer {
            model: model.clone(),
            inputs,
            labels,
            learner: Learner { params, adam: checkpoint.adam },
            validation,
            report: checkpoint.report,
        })
    }
}

fn tabulate(model: &RobotModel, dataset: &Dataset, spec: &MlpSpec) -> Result<(Array2<f64>, Array2<f64>), SamplerError> {
    if dataset.is_empty() {
        return Err(SamplerError::Config("empty dataset".into()));
    }
    let (din, dout) = (encoding_size(model), model.dof());
    if spec.input_size() != din || spec.output_size() != dout {
        return Err(SamplerError::Config(format!(
            "network maps {} → {}, dataset needs {din} → {dout}",
            spec.input_size(),
            spec.output_size()
        )));
    }
    let mut inputs = Array2::zeros((dataset.len(), din));
    let mut labels = Array2::zeros((dataset.len(), dout));
    for (i, pair) in dataset.pairs.iter().enumerate() {
        if pair.theta.len() != dout || pair.pose.is_planar() != model.is_planar() {
            return Err(SamplerError::Config(format!("dataset pair {i} does not fit the robot model")));
        }
        for (j, v) in encode_pose(&pair.pose).into_iter().enumerate() {
            inputs[[i, j]] = v;
        }
        for (j, v) in pair.theta.0.iter().enumerate() {
            labels[[i, j]] = *v;
        }
    }
    Ok((inputs, labels))
}

impl Trainer for AnnTrainer {
    fn report(&self) -> &TrainReport {
        &self.report
    }

    fn run_epoch(&mut self) -> Result<(), SamplerError> {
        let config = self.report.config.clone();
        let epoch = self.report.epochs();
        let mut rng = epoch_rng(config.seed, epoch);
        let n = self.inputs.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut cursor = 0;
        let mut log = EpochLog::start();
        for b in 0..config.batches_per_epoch {
            let idx: Vec<usize> = (0..config.batch_size).map(|k| order[(cursor + k) % n]).collect();
            cursor = (cursor + config.batch_size) % n;
            let x = self.inputs.select(ndarray::Axis(0), &idx);
            let y = self.labels.select(ndarray::Axis(0), &idx);
            let cache = self.learner.params.forward_batch(&x)?;
            let diff = cache.output() - &y;
            let bs = idx.len() as f64;
            let loss = diff.iter().map(|d| d * d).sum::<f64>() / bs;
            let d_out = diff * (2.0 / bs);
            let (grads, _) = self.learner.params.backward_batch(&cache, &d_out);
            log.batch(epoch + 1, loss, &grads)?;
            self.learner.step(&grads, config.learning_rate_at(epoch * config.batches_per_epoch + b));
        }
        log.finish(&mut self.report, &self.model, &self.validation, &self.learner.params)?;
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
        Sampler::learned(SamplerKind::Ann, self.model.clone(), self.learner.params.clone())
    }
}

/// Mini-batch Adam on the mean squared joint-space error.
pub fn train_ann(
    model: &RobotModel,
    dataset: &Dataset,
    spec: &MlpSpec,
    config: &TrainConfig,
) -> Result<(Sampler, TrainReport), SamplerError> {
    let mut trainer = AnnTrainer::new(model, dataset, spec, config)?;
    trainer.run()?;
    Ok((trainer.sampler(), trainer.report))
}
