use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{HarnessError, RunConfig};
use crate::kinematics::{load_robot, robot_hash, save_robot};
use crate::metrics::{drp_csv, summarize};
use crate::models::{MlpDocument, MlpParams};
use crate::samplers::{Checkpoint, Sampler, SamplerKind, SamplerManifest, TrainReport, MANIFEST_SCHEMA};

const WEIGHTS: &str = "weights.json";
const CRITIC: &str = "critic.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    write_text(path, &(text + "\n"))
}

fn write_json_compact<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string(value).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    write_text(path, &(text + "\n"))
}

/// Checkpoints are large, so they are written without indentation.
pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), HarnessError> {
    write_json_compact(path, checkpoint)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => HarnessError::Missing(format!("{} not found", path.display())),
        _ => HarnessError::Io { path: path.to_path_buf(), source },
    })?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CriticFile {
    critic: MlpDocument,
    snapshots: Vec<(usize, MlpDocument)>,
}

pub fn checkpoint_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("epoch_{epoch:04}.json"))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    read_json(path)
}

/// Writes the full artifact set of a finished run into `dir`.
pub fn save_run(dir: &Path, sampler: &Sampler, report: Option<&TrainReport>, config: &RunConfig) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("run.json"), config)?;
    write_text(&dir.join("robot.json"), &save_robot(&sampler.model))?;
    let weights = sampler.params.as_ref().map(|p| {
        write_text(&dir.join(WEIGHTS), &p.save())?;
        Ok::<_, HarnessError>(WEIGHTS)
    });
    let weights = weights.transpose()?;
    if let Some(critic) = &sampler.critic {
        let file = CriticFile {
            critic: critic.to_document(),
            snapshots: sampler.critic_snapshots.iter().map(|(e, p)| (*e, p.to_document())).collect(),
        };
        write_json_compact(&dir.join(CRITIC), &file)?;
    }
    write_json(&dir.join("manifest.json"), &sampler.manifest(report.map(|r| &r.config), weights))?;
    if let Some(report) = report {
        write_json_compact(&dir.join("report.json"), report)?;
        write_json(&dir.join("summary.json"), &summarize(report))?;
        write_text(&dir.join("drp.csv"), &drp_csv(report)?)?;
    }
    Ok(())
}

pub fn load_report(dir: &Path) -> Result<TrainReport, HarnessError> {
    read_json(&dir.join("report.json"))
}

/// Reloads a sampler saved by [`save_run`]; fails if the robot file does not
/// match the manifest's hash.
pub fn load_run_sampler(dir: &Path) -> Result<Sampler, HarnessError> {
    let manifest: SamplerManifest = read_json(&dir.join("manifest.json"))?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(HarnessError::Usage(format!("manifest schema {:?} is not {MANIFEST_SCHEMA:?}", manifest.schema)));
    }
    let robot_path = dir.join("robot.json");
    let text = fs::read_to_string(&robot_path).map_err(io_err(&robot_path))?;
    let model = load_robot(&text)?;
    if robot_hash(&model) != manifest.robot_hash {
        return Err(HarnessError::Usage(format!("{} does not match the manifest's robot hash", robot_path.display())));
    }
    if manifest.kind == SamplerKind::Random {
        return Ok(Sampler::random(model, manifest.random.unwrap_or_default()));
    }
    let file = manifest.weights.as_deref().unwrap_or(WEIGHTS);
    let weights_path = dir.join(file);
    let text = fs::read_to_string(&weights_path).map_err(io_err(&weights_path))?;
    let mut sampler = Sampler::learned(manifest.kind, model, MlpParams::load(&text)?);
    let critic_path = dir.join(CRITIC);
    if critic_path.exists() {
        let file: CriticFile = read_json(&critic_path)?;
        sampler.critic = Some(MlpParams::from_document(file.critic)?);
        sampler.critic_snapshots = file
            .snapshots
            .into_iter()
            .map(|(e, d)| Ok((e, MlpParams::from_document(d)?)))
            .collect::<Result<_, HarnessError>>()?;
    }
    Ok(sampler)
}
