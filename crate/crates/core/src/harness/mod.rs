//! Experiment orchestration: scenarios and per-method defaults, run
//! directories with checkpoints, grid search, method comparisons and
//! plot-ready CSV export.
//!
//! A run directory holds everything needed to reload a sampler and its
//! training record:
//!
//! ```text
//! run.json        RunConfig used for training
//! robot.json      robot model ("kinform-robot/1")
//! manifest.json   sampler manifest ("kinform-sampler/1")
//! weights.json    actor network ("kinform-mlp/1"), learned methods only
//! critic.json     final critic plus snapshots, DDPG only
//! report.json     full TrainReport
//! summary.json    ReportSummary ("kinform-report/1")
//! drp.csv         per-epoch loss, validation distance and DRP
//! checkpoints/    epoch_NNNN.json resumable checkpoints
//! ```

mod compare;
mod config;
mod export;
mod grid;
mod store;
mod train;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{accuracy_log, compare, reachable_targets, ComparisonReport, MethodEntry, COMPARISON_SCHEMA};
pub use config::{merge_json, ExperimentConfig, GridCell, GridSpec, RunConfig, EXPERIMENT_SCHEMA, GRID_SCHEMA, RUN_SCHEMA};
pub use export::{export, ExportKind, ExportOptions};
pub use grid::{grid_search, leaderboard_csv, GridOutcome, LeaderboardRow};
pub use store::{
    checkpoint_path, load_checkpoint, load_report, load_run_sampler, read_json, save_run, write_checkpoint, write_json, write_text,
};
pub use train::{gen_data, resume_run, train_run, RunOutcome};

use crate::kinematics::{AmmrModel, KinematicsError, PlanarChain, RobotModel};
use crate::metrics::MetricsError;
use crate::models::ModelError;
use crate::samplers::{ControlMode, SamplerError};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags or configuration; the CLI maps this to exit code 2.
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Missing(String),
    #[error("all {0} grid runs diverged")]
    AllDiverged(usize),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl HarnessError {
    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Usage(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Planar2,
    Ammr9Dc,
    Ammr9Wbc,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Planar2, Scenario::Ammr9Dc, Scenario::Ammr9Wbc];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Planar2 => "planar2",
            Scenario::Ammr9Dc => "ammr9_dc",
            Scenario::Ammr9Wbc => "ammr9_wbc",
        }
    }

    /// Default robot of the scenario.
    pub fn robot(self) -> RobotModel {
        match self {
            Scenario::Planar2 => RobotModel::Planar(PlanarChain::default()),
            Scenario::Ammr9Dc | Scenario::Ammr9Wbc => RobotModel::Ammr(AmmrModel::default()),
        }
    }

    pub fn control_mode(self) -> ControlMode {
        match self {
            Scenario::Planar2 => ControlMode::Planar,
            Scenario::Ammr9Dc => ControlMode::Dc,
            Scenario::Ammr9Wbc => ControlMode::Wbc,
        }
    }

    pub fn is_decoupled(self) -> bool {
        self == Scenario::Ammr9Dc
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown scenario {s:?} (expected planar2, ammr9_dc or ammr9_wbc)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Random,
    Ann,
    Ddpg,
    Robkinet,
}

impl Method {
    /// Table order: baselines first.
    pub const ALL: [Method; 4] = [Method::Random, Method::Ann, Method::Ddpg, Method::Robkinet];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "rs",
            Method::Ann => "ann",
            Method::Ddpg => "ddpg",
            Method::Robkinet => "robkinet",
        }
    }

    pub fn is_learned(self) -> bool {
        self != Method::Random
    }

    /// `all` or a comma-separated list of method names.
    pub fn parse_list(s: &str) -> Result<Vec<Method>, HarnessError> {
        if s.trim() == "all" {
            return Ok(Method::ALL.to_vec());
        }
        let mut methods = s.split(',').map(|m| m.trim().parse()).collect::<Result<Vec<Method>, _>>()?;
        methods.sort();
        methods.dedup();
        if methods.is_empty() {
            return Err(HarnessError::Usage("empty method list".into()));
        }
        Ok(methods)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rs" | "random" => Ok(Method::Random),
            "ann" => Ok(Method::Ann),
            "ddpg" => Ok(Method::Ddpg),
            "robkinet" => Ok(Method::Robkinet),
            _ => Err(HarnessError::Usage(format!("unknown method {s:?} (expected rs, ann, ddpg or robkinet)"))),
        }
    }
}
