use std::cmp::Ordering;
use std::path::Path;
use std::sync::atomic::{self, AtomicUsize};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::store::{write_json, write_text};
use super::train::new_trainer;
use super::{GridCell, GridSpec, HarnessError, Method, RunConfig, Scenario};
use crate::metrics::{epochs_to_drp, mean_epochs, summarize, MetricsError, ReportSummary};
use crate::samplers::SamplerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub cell: GridCell,
    pub seeds: usize,
    pub reached: usize,
    pub diverged: usize,
    /// Mean over seeds; `None` unless every seed reached the threshold.
    pub mean_epochs_to_drp: Option<f64>,
    /// Mean over non-diverged seeds.
    pub mean_final_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub method: Method,
    pub scenario: Scenario,
    pub threshold: f64,
    /// Sorted best first.
    pub rows: Vec<LeaderboardRow>,
}

impl GridOutcome {
    pub fn best(&self) -> &LeaderboardRow {
        &self.rows[0]
    }
}

enum RunResult {
    Done(ReportSummary, Option<usize>),
    Diverged,
}

fn run_cell(
    method: Method,
    scenario: Scenario,
    base: &RunConfig,
    cell: &GridCell,
    seed: u64,
    threshold: f64,
    dir: &Path,
) -> Result<RunResult, HarnessError> {
    let mut config = base.clone();
    config.hidden = cell.hidden.clone();
    config.train.learning_rate = cell.learning_rate;
    config.train.batch_size = cell.batch_size;
    config.train.seed = seed;
    config.train.stop_at_drp = Some(config.train.stop_at_drp.unwrap_or(threshold));
    let mut trainer = new_trainer(method, scenario, &config)?;
    let outcome = (|| {
        while !trainer.finished() {
            trainer.run_epoch()?;
        }
        Ok::<_, SamplerError>(())
    })();
    match outcome {
        Ok(()) => {}
        Err(SamplerError::Divergence { .. }) => return Ok(RunResult::Diverged),
        Err(e) => return Err(e.into()),
    }
    let report = trainer.report();
    let summary = summarize(report);
    write_json(&dir.join(format!("cell_{:04}", cell.index)).join(format!("seed_{seed}")).join("summary.json"), &summary)?;
    Ok(RunResult::Done(summary, epochs_to_drp(&report.drp, threshold)))
}

fn rank_order(a: &LeaderboardRow, b: &LeaderboardRow) -> Ordering {
    let key = |r: &LeaderboardRow| (r.mean_epochs_to_drp.is_none(), r.mean_final_distance.is_none());
    key(a)
        .cmp(&key(b))
        .then_with(|| a.mean_epochs_to_drp.unwrap_or(0.0).total_cmp(&b.mean_epochs_to_drp.unwrap_or(0.0)))
        .then_with(|| a.mean_final_distance.unwrap_or(0.0).total_cmp(&b.mean_final_distance.unwrap_or(0.0)))
        .then_with(|| a.cell.index.cmp(&b.cell.index))
}

/// Trains every cell for every seed and ranks cells by mean epochs to
/// `threshold` DRP, ties broken by the smaller mean final validation
/// distance. Runs stop once the threshold has held, so a cell's final
/// distance is measured where it stopped.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    method: Method,
    scenario: Scenario,
    base: &RunConfig,
    grid: &GridSpec,
    seeds: &[u64],
    threshold: f64,
    workers: usize,
    out: &Path,
) -> Result<GridOutcome, HarnessError> {
    if !method.is_learned() {
        return Err(HarnessError::Usage("random search has no hyperparameters to tune".into()));
    }
    grid.validate()?;
    if seeds.is_empty() {
        return Err(HarnessError::Usage("at least one seed is required".into()));
    }
    base.validate()?;
    write_json(&out.join("grid.json"), grid)?;
    let cells = grid.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let results: Mutex<Vec<Option<RunResult>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<HarnessError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.len()) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, atomic::Ordering::Relaxed);
                if j >= jobs.len() || failure.lock().expect("lock").is_some() {
                    break;
                }
                let (c, seed) = jobs[j];
                match run_cell(method, scenario, base, &cells[c], seed, threshold, out) {
                    Ok(r) => results.lock().expect("lock")[j] = Some(r),
                    Err(e) => {
                        failure.lock().expect("lock").get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let results = results.into_inner().expect("lock");
    if results.iter().all(|r| matches!(r, Some(RunResult::Diverged))) {
        return Err(HarnessError::AllDiverged(jobs.len()));
    }
    let mut rows: Vec<LeaderboardRow> = cells
        .iter()
        .map(|cell| {
            let runs: Vec<&RunResult> =
                jobs.iter().zip(&results).filter(|((c, _), _)| *c == cell.index).filter_map(|(_, r)| r.as_ref()).collect();
            let counts: Vec<Option<usize>> =
                runs.iter().map(|r| if let RunResult::Done(_, e) = r { *e } else { None }).collect();
            let finals: Vec<f64> =
                runs.iter().filter_map(|r| if let RunResult::Done(s, _) = r { Some(s.final_distance) } else { None }).collect();
            LeaderboardRow {
                rank: 0,
                cell: cell.clone(),
                seeds: runs.len(),
                reached: counts.iter().flatten().count(),
                diverged: runs.iter().filter(|r| matches!(r, RunResult::Diverged)).count(),
                mean_epochs_to_drp: mean_epochs(&counts),
                mean_final_distance: (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64),
            }
        })
        .collect();
    rows.sort_by(rank_order);
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    let outcome = GridOutcome { method, scenario, threshold, rows };
    write_text(&out.join("leaderboard.csv"), &leaderboard_csv(&outcome)?)?;
    write_json(&out.join("best.json"), outcome.best())?;
    Ok(outcome)
}

/// `rank,cell,architecture,learning_rate,batch_size,seeds,reached,diverged,mean_epochs_to_drp,mean_final_distance`;
/// unreachable cells print `unreachable`, cells without a finished run an
/// empty distance.
pub fn leaderboard_csv(outcome: &GridOutcome) -> Result<String, HarnessError> {
    let csv_err = |e: csv::Error| HarnessError::Metrics(MetricsError::Csv(e.to_string()));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "cell",
        "architecture",
        "learning_rate",
        "batch_size",
        "seeds",
        "reached",
        "diverged",
        "mean_epochs_to_drp",
        "mean_final_distance",
    ])
    .map_err(csv_err)?;
    for r in &outcome.rows {
        w.write_record([
            r.rank.to_string(),
            r.cell.index.to_string(),
            r.cell.architecture(),
            r.cell.learning_rate.to_string(),
            r.cell.batch_size.to_string(),
            r.seeds.to_string(),
            r.reached.to_string(),
            r.diverged.to_string(),
            r.mean_epochs_to_drp.map_or("unreachable".to_string(), |e| e.to_string()),
            r.mean_final_distance.map_or(String::new(), |d| d.to_string()),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Metrics(MetricsError::Csv(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
