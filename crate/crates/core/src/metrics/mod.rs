//! Training-dynamics and sampling-accuracy measurements.

mod accuracy;
mod drp;
mod export;
mod pca;
mod rewards;

pub use accuracy::{accuracy_eval, base_accuracy_eval, AccuracyProtocol, AccuracyReport, TargetOutcome, ORIENTATION_LOG_DEG};
pub use drp::{drp_percent, epochs_to_drp, mean_epochs, optimization_factor, DrpHistory};
pub use export::{
    accuracy_csv, drp_csv, mean_first_component, pca_csv, pca_series, rewards_csv, summarize, trajectory_csv,
    ReportSummary, REPORT_SCHEMA,
};
pub use pca::{gradient_matrix, pca_explained, ExplainedVariance, GradientMatrix};
pub use rewards::{critic_reward_distribution, critic_values, wasserstein1, CheckpointHistogram, RewardDistribution, RewardProbe};

use thiserror::Error;

use crate::kinematics::KinematicsError;
use crate::samplers::SamplerError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("baseline distance d₀ is zero")]
    ZeroBaseline,
    #[error("epoch {epoch} outside a {epochs}-epoch history")]
    EpochOutOfRange { epoch: usize, epochs: usize },
    #[error("PCA needs at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("gradient matrix has no variance after centering")]
    Degenerate,
    #[error("non-finite gradient entry")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("nothing to evaluate")]
    Empty,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}
