//! One-step actor-critic baseline.
//!
//! Each episode is a single decision: the state is a pose target, the action
//! a full configuration, and the reward the negative squared pose distance
//! reached by that configuration. With one step per episode there is no
//! successor state, so the critic target is the reward alone unless
//! `gamma > 0`, in which case the target networks' value of the same state
//! is bootstrapped in.

use ndarray::{concatenate, s, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::task::{encode_batch, encode_pose, encoding_size, pose_loss, uniform_config};
use super::trainer::{epoch_rng, initial_report, Checkpoint, DdpgState, EpochLog, Learner, Trainer, Validation};
use super::{ReplayBuffer, Sampler, SamplerError, SamplerKind, TrainConfig, TrainReport, Transition};
use crate::kinematics::{Pose, RobotModel};
use crate::models::{Adam, MlpParams, MlpSpec, OutputMode};

pub struct DdpgTrainer {
    model: RobotModel,
    actor: Learner,
    critic: Learner,
    target_actor: MlpParams,
    target_critic: MlpParams,
    buffer: ReplayBuffer,
    validation: Validation,
    report: TrainReport,
    snapshots: Vec<(usize, MlpParams)>,
}

/// Reward of configuration `theta` for `target`: `−pose_distance²`.
pub fn reward(model: &RobotModel, theta: &[f64], target: &Pose, rotation_weight: f64) -> f64 {
    -pose_loss(model, theta, target, rotation_weight)
}

/// Default critic: pose encoding ⊕ configuration → scalar.
pub fn critic_spec(model: &RobotModel, hidden: &[usize]) -> Result<MlpSpec, SamplerError> {
    let mut sizes = vec![encoding_size(model) + model.dof()];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    Ok(MlpSpec::linear(sizes)?)
}

/// Rows `[encode(pose) | action]`.
pub fn critic_inputs(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[states.view(), actions.view()]).expect("row counts agree")
}

impl DdpgTrainer {
    pub fn new(model: &RobotModel, actor_spec: &MlpSpec, critic: &MlpSpec, config: &TrainConfig) -> Result<Self, SamplerError> {
        config.validate()?;
        check_specs(model, actor_spec, critic)?;
        let actor = MlpParams::init(actor_spec, config.seed)?;
        let critic = MlpParams::init(critic, config.seed.wrapping_add(1))?;
        let validation = Validation::new(model, config);
        let report = initial_report("ddpg", model, config, &validation, &actor)?;

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(u64::MAX);
        let limits = model.joint_limits();
        let mut buffer = ReplayBuffer::new(config.ddpg.buffer_capacity);
        for _ in 0..config.ddpg.initial_buffer {
            let pose = config.task.draw(model, &mut rng);
            let action = uniform_config(&limits, &mut rng).0;
            let r = reward(model, &action, &pose, config.rotation_weight);
            buffer.push(Transition { pose, action, reward: r });
        }
        Ok(DdpgTrainer {
            model: model.clone(),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            snapshots: vec![(0, critic.clone())],
            actor: Learner::new(actor, config),
            critic: Learner { adam: Adam::new(config.adam, critic.param_count()), params: critic },
            buffer,
            validation,
            report,
        })
    }

    pub fn resume(model: &RobotModel, checkpoint: Checkpoint) -> Result<Self, SamplerError> {
        let state = checkpoint.ddpg.ok_or_else(|| SamplerError::Config("checkpoint has no actor-critic state".into()))?;
        let actor = MlpParams::from_document(checkpoint.actor)?;
        let critic = MlpParams::from_document(state.critic)?;
        check_specs(model, &actor.spec, &critic.spec)?;
        let snapshots = state
            .snapshots
            .into_iter()
            .map(|(e, d)| Ok((e, MlpParams::from_document(d)?)))
            .collect::<Result<Vec<_>, SamplerError>>()?;
        Ok(DdpgTrainer {
            model: model.clone(),
            actor: Learner { params: actor, adam: checkpoint.adam },
            critic: Learner { params: critic, adam: state.critic_adam },
            target_actor: MlpParams::from_document(state.target_actor)?,
            target_critic: MlpParams::from_document(state.target_critic)?,
            buffer: state.buffer,
            validation: Validation::new(model, &checkpoint.report.config),
            report: checkpoint.report,
            snapshots,
        })
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn critic(&self) -> &MlpParams {
        &self.critic.params
    }

    /// Critic parameters at epoch 0 and every `snapshot_every` epochs.
    pub fn snapshots(&self) -> &[(usize, MlpParams)] {
        &self.snapshots
    }

    fn explore(&mut self, rng: &mut ChaCha8Rng) -> Result<(), SamplerError> {
        let config = &self.report.config;
        let limits = self.model.joint_limits();
        let half = limits.half_ranges();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        for _ in 0..config.ddpg.resample_per_epoch {
            let pose = config.task.draw(&self.model, rng);
            let mut action = self.actor.params.forward(&encode_pose(&pose))?;
            for (j, a) in action.iter_mut().enumerate() {
                let noisy = *a + config.ddpg.noise_sigma * half[j] * normal.sample(rng);
                *a = noisy.clamp(limits.lower[j], limits.upper[j]);
            }
            let r = reward(&self.model, &action, &pose, config.rotation_weight);
            self.buffer.push(Transition { pose, action, reward: r });
        }
        Ok(())
    }

    /// One critic regression step on a frozen buffer; returns the batch loss.
    pub fn critic_step(&mut self, rng: &mut ChaCha8Rng, lr: f64) -> Result<f64, SamplerError> {
        let config = self.report.config.clone();
        let (states, actions, rewards) = self.minibatch(config.batch_size, rng);
        let (loss, grads) = self.critic_gradient(&states, &actions, &rewards)?;
        self.critic.step(&grads, lr);
        Ok(loss)
    }

    /// Mean `(Q − y)²` of the critic on the whole buffer.
    pub fn critic_buffer_loss(&self) -> Result<f64, SamplerError> {
        let poses: Vec<Pose> = self.buffer.iter().map(|t| t.pose).collect();
        let states = encode_batch(&poses);
        let actions = Array2::from_shape_fn((poses.len(), self.model.dof()), |(i, j)| self.buffer.get(i).action[j]);
        let q = self.critic.params.forward_batch(&critic_inputs(&states, &actions))?;
        let n = poses.len() as f64;
        Ok(self.buffer.iter().zip(q.output().column(0)).map(|(t, q)| (q - t.reward).powi(2)).sum::<f64>() / n)
    }

    fn minibatch(&self, n: usize, rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>, Vec<f64>) {
        let idx = self.buffer.sample_indices(n, rng);
        let poses: Vec<Pose> = idx.iter().map(|&i| self.buffer.get(i).pose).collect();
        let states = encode_batch(&poses);
        let actions = Array2::from_shape_fn((n, self.model.dof()), |(i, j)| self.buffer.get(idx[i]).action[j]);
        let rewards = idx.iter().map(|&i| self.buffer.get(i).reward).collect();
        (states, actions, rewards)
    }

    fn critic_gradient(
        &self,
        states: &Array2<f64>,
        actions: &Array2<f64>,
        rewards: &[f64],
    ) -> Result<(f64, crate::models::LayerGradients), SamplerError> {
        let gamma = self.report.config.ddpg.gamma;
        let mut targets = rewards.to_vec();
        if gamma > 0.0 {
            let next_actions = self.target_actor.forward_batch(states)?.output().clone();
            let q_next = self.target_critic.forward_batch(&critic_inputs(states, &next_actions))?;
            for (y, q) in targets.iter_mut().zip(q_next.output().column(0)) {
                *y += gamma * q;
            }
        }
        let cache = self.critic.params.forward_batch(&critic_inputs(states, actions))?;
        let n = rewards.len() as f64;
        let diff: Vec<f64> = cache.output().column(0).iter().zip(&targets).map(|(q, y)| q - y).collect();
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let d_out = Array2::from_shape_fn((diff.len(), 1), |(i, _)| 2.0 * diff[i] / n);
        let (grads, _) = self.critic.params.backward_batch(&cache, &d_out);
        Ok((loss, grads))
    }
}

fn check_specs(model: &RobotModel, actor: &MlpSpec, critic: &MlpSpec) -> Result<(), SamplerError> {
    let (enc, dof) = (encoding_size(model), model.dof());
    if actor.input_size() != enc || actor.output_size() != dof {
        return Err(SamplerError::Config(format!("actor must map {enc} → {dof}")));
    }
    if critic.input_size() != enc + dof || critic.output_size() != 1 {
        return Err(SamplerError::Config(format!("critic must map {} → 1", enc + dof)));
    }
    if critic.output_mode != OutputMode::Linear {
        return Err(SamplerError::Config("critic output must be linear".into()));
    }
    Ok(())
}

fn soft_update(target: &mut MlpParams, source: &MlpParams, tau: f64) {
    for (t, s) in target.weights.iter_mut().zip(&source.weights) {
        t.zip_mut_with(s, |t, &s| *t = tau * s + (1.0 - tau) * *t);
    }
    for (t, s) in target.biases.iter_mut().zip(&source.biases) {
        t.zip_mut_with(s, |t, &s| *t = tau * s + (1.0 - tau) * *t);
    }
}

impl Trainer for DdpgTrainer {
    fn report(&self) -> &TrainReport {
        &self.report
    }

    fn run_epoch(&mut self) -> Result<(), SamplerError> {
        let config = self.report.config.clone();
        let epoch = self.report.epochs();
        let mut rng = epoch_rng(config.seed, epoch);
        self.explore(&mut rng)?;
        let enc = encoding_size(&self.model);
        let dof = self.model.dof();
        let mut log = EpochLog::start();
        for b in 0..config.batches_per_epoch {
            let step = epoch * config.batches_per_epoch + b;
            let factor = config.lr_schedule.factor(step, config.total_steps());
            let (states, actions, rewards) = self.minibatch(config.batch_size, &mut rng);

            let (critic_loss, critic_grads) = self.critic_gradient(&states, &actions, &rewards)?;
            if !critic_loss.is_finite() || !critic_grads.is_finite() {
                return Err(SamplerError::Divergence { epoch: epoch + 1, loss: critic_loss });
            }
            self.critic.step(&critic_grads, config.ddpg.critic_learning_rate * factor);

            // Actor ascends Q(s, μ(s)): minimize −mean Q.
            let actor_cache = self.actor.params.forward_batch(&states)?;
            let q_cache = self.critic.params.forward_batch(&critic_inputs(&states, actor_cache.output()))?;
            let n = states.nrows() as f64;
            let d_q = Array2::from_elem((states.nrows(), 1), -1.0 / n);
            let (_, d_input) = self.critic.params.backward_batch(&q_cache, &d_q);
            let d_action = d_input.slice(s![.., enc..enc + dof]).to_owned();
            let (actor_grads, _) = self.actor.params.backward_batch(&actor_cache, &d_action);
            log.batch(epoch + 1, critic_loss, &actor_grads)?;
            self.actor.step(&actor_grads, config.learning_rate * factor);

            soft_update(&mut self.target_actor, &self.actor.params, config.ddpg.tau);
            soft_update(&mut self.target_critic, &self.critic.params, config.ddpg.tau);
        }
        log.finish(&mut self.report, &self.model, &self.validation, &self.actor.params)?;
        if self.report.epochs() % config.ddpg.snapshot_every == 0 {
            self.snapshots.push((self.report.epochs(), self.critic.params.clone()));
        }
        Ok(())
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            method: self.report.method.clone(),
            actor: self.actor.params.to_document(),
            adam: self.actor.adam.clone(),
            report: self.report.clone(),
            ddpg: Some(DdpgState {
                critic: self.critic.params.to_document(),
                critic_adam: self.critic.adam.clone(),
                target_actor: self.target_actor.to_document(),
                target_critic: self.target_critic.to_document(),
                buffer: self.buffer.clone(),
                snapshots: self.snapshots.iter().map(|(e, p)| (*e, p.to_document())).collect(),
            }),
        }
    }

    fn sampler(&self) -> Sampler {
        let mut s = Sampler::learned(SamplerKind::Ddpg, self.model.clone(), self.actor.params.clone());
        s.critic = Some(self.critic.params.clone());
        s.critic_snapshots = self.snapshots.clone();
        s
    }
}

/// Trains actor and critic; the critic spec defaults from `config` when
/// `critic` is `None`.
pub fn train_ddpg(
    model: &RobotModel,
    actor: &MlpSpec,
    critic: Option<&MlpSpec>,
    config: &TrainConfig,
) -> Result<(Sampler, TrainReport), SamplerError> {
    let default_critic;
    let critic = match critic {
        Some(c) => c,
        None => {
            default_critic = critic_spec(model, &config.ddpg.critic_hidden)?;
            &default_critic
        }
    };
    let mut trainer = DdpgTrainer::new(model, actor, critic, config)?;
    trainer.run()?;
    Ok((trainer.sampler(), trainer.report))
}
