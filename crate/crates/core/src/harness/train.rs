use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::store::{checkpoint_path, load_checkpoint, save_run, write_checkpoint};
use super::{HarnessError, Method, RunConfig, Scenario};
use crate::samplers::{
    critic_spec, gen_dataset, AnnTrainer, Checkpoint, Dataset, DdpgTrainer, RobKiNetTrainer, Sampler, TrainReport, Trainer,
};

/// What a finished run left behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub sampler: Sampler,
    /// `None` for the random baseline, which has nothing to train.
    pub report: Option<TrainReport>,
}

/// Writes `n` FK-labelled pairs as JSON lines.
pub fn gen_data(scenario: Scenario, n: usize, seed: u64, out: &Path) -> Result<Dataset, HarnessError> {
    let dataset = gen_dataset(&scenario.robot(), n, seed)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| HarnessError::Io { path: parent.to_path_buf(), source })?;
    }
    let io = |source| HarnessError::Io { path: out.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(out).map_err(io)?);
    dataset.write_jsonl(&mut w).map_err(io)?;
    w.flush().map_err(io)?;
    Ok(dataset)
}

fn dataset_for(scenario: Scenario, config: &RunConfig) -> Result<Dataset, HarnessError> {
    match &config.dataset {
        Some(path) => {
            let file = File::open(path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
            Ok(Dataset::read_jsonl(BufReader::new(file), config.dataset_seed)?)
        }
        None => Ok(gen_dataset(&scenario.robot(), config.dataset_size, config.dataset_seed)?),
    }
}

pub(super) fn new_trainer(method: Method, scenario: Scenario, config: &RunConfig) -> Result<Box<dyn Trainer>, HarnessError> {
    let model = scenario.robot();
    let spec = config.actor_spec(scenario)?;
    let train = &config.train;
    Ok(match method {
        Method::Robkinet => Box::new(RobKiNetTrainer::new(&model, &spec, train, scenario.control_mode())?),
        Method::Ann => Box::new(AnnTrainer::new(&model, &dataset_for(scenario, config)?, &spec, train)?),
        Method::Ddpg => {
            let critic = critic_spec(&model, &train.ddpg.critic_hidden)?;
            Box::new(DdpgTrainer::new(&model, &spec, &critic, train)?)
        }
        Method::Random => unreachable!("random search has no trainer"),
    })
}

fn method_of_checkpoint(name: &str) -> Option<Method> {
    match name {
        "robkinet" | "robkinet_dc" => Some(Method::Robkinet),
        "ann" => Some(Method::Ann),
        "ddpg" => Some(Method::Ddpg),
        _ => None,
    }
}

fn resumed_trainer(
    method: Method,
    scenario: Scenario,
    checkpoint: Checkpoint,
    config: &RunConfig,
) -> Result<Box<dyn Trainer>, HarnessError> {
    if method_of_checkpoint(&checkpoint.method) != Some(method) {
        return Err(HarnessError::Usage(format!("checkpoint was written by {:?}, not {method}", checkpoint.method)));
    }
    let model = scenario.robot();
    Ok(match method {
        Method::Robkinet => Box::new(RobKiNetTrainer::resume(&model, scenario.control_mode(), checkpoint)?),
        Method::Ann => Box::new(AnnTrainer::resume(&model, &dataset_for(scenario, config)?, checkpoint)?),
        Method::Ddpg => Box::new(DdpgTrainer::resume(&model, checkpoint)?),
        Method::Random => unreachable!("random search has no trainer"),
    })
}

fn drive(mut trainer: Box<dyn Trainer>, config: &RunConfig, dir: &Path) -> Result<RunOutcome, HarnessError> {
    while !trainer.finished() {
        trainer.run_epoch()?;
        let epoch = trainer.epochs_done();
        if config.checkpoint_epochs.contains(&epoch) {
            write_checkpoint(&checkpoint_path(dir, epoch), &trainer.checkpoint())?;
        }
    }
    let epoch = trainer.epochs_done();
    write_checkpoint(&checkpoint_path(dir, epoch), &trainer.checkpoint())?;
    let sampler = trainer.sampler();
    let report = trainer.report().clone();
    save_run(dir, &sampler, Some(&report), config)?;
    Ok(RunOutcome { dir: dir.to_path_buf(), sampler, report: Some(report) })
}

/// Trains `method` on `scenario` and writes the run directory `dir`.
pub fn train_run(method: Method, scenario: Scenario, config: &RunConfig, dir: &Path) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    if method == Method::Random {
        let mut search = config.random;
        search.seed = config.train.seed;
        let sampler = Sampler::random(scenario.robot(), search);
        save_run(dir, &sampler, None, config)?;
        return Ok(RunOutcome { dir: dir.to_path_buf(), sampler, report: None });
    }
    drive(new_trainer(method, scenario, config)?, config, dir)
}

/// Continues the run saved in `checkpoint` to its configured epoch count.
/// The training settings come from the checkpoint; `config` supplies the
/// dataset source and further checkpoint epochs.
pub fn resume_run(
    method: Method,
    scenario: Scenario,
    checkpoint: &Path,
    config: &RunConfig,
    dir: &Path,
) -> Result<RunOutcome, HarnessError> {
    let checkpoint = load_checkpoint(checkpoint)?;
    let mut config = config.clone();
    config.train = checkpoint.report.config.clone();
    config.validate()?;
    drive(resumed_trainer(method, scenario, checkpoint, &config)?, &config, dir)
}
