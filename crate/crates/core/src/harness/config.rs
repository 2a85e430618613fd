use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{HarnessError, Method, Scenario};
use crate::models::{MlpSpec, OutputMode};
use crate::samplers::{RandomSearch, ScaleProfile, TrainConfig};

pub const RUN_SCHEMA: &str = "kinform-run/1";
pub const GRID_SCHEMA: &str = "kinform-grid/1";
pub const EXPERIMENT_SCHEMA: &str = "kinform-experiment/1";

/// Everything one training run needs beyond the method and scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: String,
    pub train: TrainConfig,
    /// Hidden layer widths of the actor network.
    pub hidden: Vec<usize>,
    /// Supervised dataset size and seed (ANN only).
    pub dataset_size: usize,
    pub dataset_seed: u64,
    /// Read the dataset from this JSON-lines file instead of generating it.
    pub dataset: Option<PathBuf>,
    /// Epochs after which a resumable checkpoint is written. The final
    /// epoch always gets one.
    pub checkpoint_epochs: Vec<usize>,
    pub random: RandomSearch,
}

impl RunConfig {
    /// Tuned desk defaults, or the larger paper-scale dataset sizes.
    pub fn defaults(method: Method, scenario: Scenario, profile: ScaleProfile) -> RunConfig {
        let mut train = TrainConfig::for_profile(profile);
        if profile == ScaleProfile::Desk {
            train.epochs = 200;
        }
        let planar = scenario == Scenario::Planar2;
        let deep = vec![256, 128, 64];
        let hidden = match (method, planar) {
            (Method::Ann | Method::Ddpg, true) => vec![64, 64],
            _ => deep,
        };
        if !planar {
            train.learning_rate = 1e-3;
            train.batch_size = 256;
        }
        if method == Method::Ddpg {
            train.learning_rate = 1e-4;
        }
        RunConfig {
            schema: RUN_SCHEMA.to_string(),
            train,
            hidden,
            dataset_size: match profile {
                ScaleProfile::Desk => 10_000,
                ScaleProfile::Paper => 30_000,
            },
            dataset_seed: 1,
            dataset: None,
            checkpoint_epochs: Vec::new(),
            random: RandomSearch::default(),
        }
    }

    /// Defaults overlaid with a partial JSON document.
    pub fn from_overrides(method: Method, scenario: Scenario, profile: ScaleProfile, overrides: Value) -> Result<RunConfig, HarnessError> {
        if let Some(schema) = overrides.get("schema") {
            if schema != RUN_SCHEMA {
                return Err(HarnessError::Usage(format!("run config schema {schema} is not {RUN_SCHEMA:?}")));
            }
        }
        let mut base = serde_json::to_value(RunConfig::defaults(method, scenario, profile)).expect("config serializes");
        merge_json(&mut base, overrides);
        let config: RunConfig = serde_json::from_value(base).map_err(|e| HarnessError::Usage(format!("run config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.train.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(HarnessError::Usage("hidden layers must be a nonempty list of positive widths".into()));
        }
        if self.dataset_size == 0 {
            return Err(HarnessError::Usage("dataset_size must be positive".into()));
        }
        if self.random.budget == 0 {
            return Err(HarnessError::Usage("random.budget must be positive".into()));
        }
        if let Some(e) = self.checkpoint_epochs.iter().find(|&&e| e == 0 || e > self.train.epochs) {
            return Err(HarnessError::Usage(format!("checkpoint epoch {e} outside 1..={}", self.train.epochs)));
        }
        Ok(())
    }

    /// Actor network for `scenario`, squashed into the robot's limits.
    pub fn actor_spec(&self, scenario: Scenario) -> Result<MlpSpec, HarnessError> {
        let robot = scenario.robot();
        let input = crate::samplers::encoding_size(&robot);
        let mut sizes = vec![input];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(robot.dof());
        Ok(MlpSpec::new(sizes, OutputMode::SquashToLimits { limits: robot.joint_limits() })?)
    }
}

/// Recursively overlays `patch` onto `base`; objects merge, everything else
/// replaces.
pub fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Architectures × learning rates × batch sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default = "grid_schema")]
    pub schema: String,
    pub architectures: Vec<Vec<usize>>,
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

fn grid_schema() -> String {
    GRID_SCHEMA.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl GridCell {
    /// Hidden widths joined with `x`, e.g. `256x128x64`.
    pub fn architecture(&self) -> String {
        self.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
    }
}

impl GridSpec {
    /// Full desk grid: 3 architectures, 6 learning rates, 8 batch sizes.
    pub fn desk() -> GridSpec {
        GridSpec {
            schema: grid_schema(),
            architectures: vec![vec![64, 64], vec![128, 128], vec![256, 128, 64]],
            learning_rates: vec![1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 3e-4],
            batch_sizes: vec![16, 32, 64, 128, 256, 512, 1024, 2048],
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema != GRID_SCHEMA {
            return Err(HarnessError::Usage(format!("grid schema {:?} is not {GRID_SCHEMA:?}", self.schema)));
        }
        if self.architectures.is_empty() || self.learning_rates.is_empty() || self.batch_sizes.is_empty() {
            return Err(HarnessError::Usage("grid must have at least one architecture, learning rate and batch size".into()));
        }
        if self.architectures.iter().any(|a| a.is_empty() || a.contains(&0)) {
            return Err(HarnessError::Usage("grid architectures need positive hidden widths".into()));
        }
        if self.learning_rates.iter().any(|&lr| !(lr > 0.0) || !lr.is_finite()) || self.batch_sizes.contains(&0) {
            return Err(HarnessError::Usage("grid learning rates and batch sizes must be positive".into()));
        }
        Ok(())
    }

    /// Cells in architecture-major order.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for hidden in &self.architectures {
            for &learning_rate in &self.learning_rates {
                for &batch_size in &self.batch_sizes {
                    cells.push(GridCell { index: cells.len(), hidden: hidden.clone(), learning_rate, batch_size });
                }
            }
        }
        cells
    }
}

/// A full experiment: which methods, which grid, how many seeds, where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: String,
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub grid: GridSpec,
    pub seeds: Vec<u64>,
    pub profile: ScaleProfile,
    pub out_dir: PathBuf,
    /// Grid cells trained concurrently.
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, methods: Vec<Method>, grid: GridSpec, seeds: Vec<u64>, out_dir: PathBuf) -> Self {
        ExperimentConfig {
            schema: EXPERIMENT_SCHEMA.to_string(),
            scenario,
            methods,
            grid,
            seeds,
            profile: ScaleProfile::Desk,
            out_dir,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.grid.validate()?;
        if self.seeds.is_empty() {
            return Err(HarnessError::Usage("at least one seed is required".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Usage("at least one method is required".into()));
        }
        if self.workers == 0 {
            return Err(HarnessError::Usage("workers must be positive".into()));
        }
        Ok(())
    }
}
