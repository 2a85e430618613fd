use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::store::{load_report, load_run_sampler};
use super::HarnessError;
use crate::metrics::{critic_reward_distribution, drp_csv, pca_csv, rewards_csv, trajectory_csv, RewardProbe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Drp,
    Pca,
    Rewards,
    Trajectory,
}

impl ExportKind {
    pub fn name(self) -> &'static str {
        match self {
            ExportKind::Drp => "drp",
            ExportKind::Pca => "pca",
            ExportKind::Rewards => "rewards",
            ExportKind::Trajectory => "trajectory",
        }
    }
}

impl fmt::Display for ExportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExportKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ExportKind::Drp, ExportKind::Pca, ExportKind::Rewards, ExportKind::Trajectory]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown export {s:?} (expected drp, pca, rewards or trajectory)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExportOptions {
    /// Explained-variance components per PCA row.
    pub top_k: usize,
    /// Reward histogram bins.
    pub bins: usize,
    pub probe_size: usize,
    pub probe_seed: u64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions { top_k: 5, bins: 20, probe_size: 512, probe_seed: 0x9b0e }
    }
}

/// Plot-ready CSV of one kind from the run directory `run`.
pub fn export(kind: ExportKind, run: &Path, options: &ExportOptions) -> Result<String, HarnessError> {
    let report = load_report(run)?;
    let missing = |what: &str| HarnessError::Missing(format!("{} has no {what}", run.display()));
    Ok(match kind {
        ExportKind::Drp => drp_csv(&report)?,
        ExportKind::Pca => {
            if report.explained_variance.is_empty() {
                return Err(missing("gradient spectra (record_gradients was off)"));
            }
            pca_csv(&report, options.top_k)?
        }
        ExportKind::Trajectory => trajectory_csv(&report)?,
        ExportKind::Rewards => {
            let sampler = load_run_sampler(run)?;
            if sampler.critic_snapshots.is_empty() {
                return Err(missing("critic snapshots (not an actor-critic run)"));
            }
            let probe = RewardProbe::draw(&sampler.model, &report.config.task, options.probe_size, options.probe_seed);
            rewards_csv(&critic_reward_distribution(&sampler, &probe, report.config.rotation_weight, options.bins)?)?
        }
    })
}
