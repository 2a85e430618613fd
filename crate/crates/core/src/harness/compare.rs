use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::store::{load_report, load_run_sampler, write_json, write_text};
use super::{HarnessError, Method, Scenario};
use crate::kinematics::Pose;
use crate::metrics::{
    accuracy_csv, accuracy_eval, base_accuracy_eval, epochs_to_drp, mean_epochs, mean_first_component, optimization_factor,
    AccuracyProtocol, AccuracyReport, MetricsError,
};
use crate::samplers::{gen_dataset, RandomSearch, Sampler};

pub const COMPARISON_SCHEMA: &str = "kinform-comparison/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    pub method: Method,
    pub runs: Vec<PathBuf>,
    /// Per run; `None` where the threshold was never held.
    pub epochs_to_drp: Vec<Option<usize>>,
    /// `None` if any run is unreachable, or for the random baseline.
    pub mean_epochs_to_drp: Option<f64>,
    /// DDPG's mean epochs over this method's; `None` when either is
    /// unreachable or absent.
    pub optimization_factor: Option<f64>,
    /// Mean over runs of the accuracy percentage.
    pub accuracy: f64,
    pub accuracy_per_run: Vec<f64>,
    /// Median best positional error; absent for decoupled control.
    pub median_position_error: Option<f64>,
    pub mean_lambda1: Option<f64>,
    pub mean_final_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema: String,
    pub scenario: Scenario,
    pub threshold: f64,
    pub base_method: Method,
    pub protocol: AccuracyProtocol,
    pub targets: usize,
    pub target_seed: u64,
    pub entries: Vec<MethodEntry>,
    /// Requested methods with no artifacts; they get no table rows.
    pub missing: Vec<Method>,
}

/// Run directories of `method` under `root`: `root/<name>` itself if it holds
/// a manifest, otherwise its subdirectories that do, in name order.
fn find_runs(root: &Path, method: Method) -> Vec<PathBuf> {
    let dir = root.join(method.name());
    if dir.join("manifest.json").is_file() {
        return vec![dir];
    }
    let Ok(entries) = fs::read_dir(&dir) else {
        return Vec::new();
    };
    let mut runs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("manifest.json").is_file()).collect();
    runs.sort();
    runs
}

/// `n` reachable targets: FK of uniform configurations drawn with `seed`.
pub fn reachable_targets(scenario: Scenario, n: usize, seed: u64) -> Result<Vec<Pose>, HarnessError> {
    Ok(gen_dataset(&scenario.robot(), n, seed)?.pairs.into_iter().map(|p| p.pose).collect())
}

fn evaluate(scenario: Scenario, sampler: &Sampler, targets: &[Pose], protocol: &AccuracyProtocol) -> Result<AccuracyReport, MetricsError> {
    if scenario.is_decoupled() {
        base_accuracy_eval(sampler, targets, protocol)
    } else {
        accuracy_eval(sampler, targets, protocol)
    }
}

/// Reproduces the epochs/factor table and the accuracy table from trained
/// run directories under `runs_root` (one per method, or one per seed below
/// it). The random baseline needs no artifacts. Methods without runs are
/// listed in `missing` and never filled in.
pub fn compare(
    scenario: Scenario,
    methods: &[Method],
    runs_root: &Path,
    protocol: &AccuracyProtocol,
    n_targets: usize,
    target_seed: u64,
    threshold: f64,
) -> Result<ComparisonReport, HarnessError> {
    if n_targets == 0 {
        return Err(HarnessError::Usage("at least one accuracy target is required".into()));
    }
    let targets = reachable_targets(scenario, n_targets, target_seed)?;
    let mut entries = Vec::new();
    let mut missing = Vec::new();
    for &method in methods {
        let runs = find_runs(runs_root, method);
        let samplers: Vec<Sampler> = if runs.is_empty() {
            if method.is_learned() {
                missing.push(method);
                continue;
            }
            vec![Sampler::random(scenario.robot(), RandomSearch { seed: protocol.seed, ..RandomSearch::default() })]
        } else {
            runs.iter().map(|r| load_run_sampler(r)).collect::<Result<_, _>>()?
        };
        for s in &samplers {
            if s.model != scenario.robot() {
                return Err(HarnessError::Usage(format!("{method} artifacts were trained on a different robot than {scenario}")));
            }
        }
        let reports = if method.is_learned() { runs.iter().map(|r| load_report(r)).collect::<Result<Vec<_>, _>>()? } else { Vec::new() };
        let counts: Vec<Option<usize>> = reports.iter().map(|r| epochs_to_drp(&r.drp, threshold)).collect();
        let lambdas: Vec<f64> = reports.iter().filter_map(|r| mean_first_component(r).ok()).collect();
        let finals: Vec<f64> = reports.iter().map(|r| r.final_distance()).collect();
        let mut accuracy_per_run = Vec::new();
        let mut medians = Vec::new();
        for s in &samplers {
            let acc = evaluate(scenario, s, &targets, protocol)?;
            accuracy_per_run.push(acc.percentage);
            medians.push(acc.median_position_error());
        }
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        entries.push(MethodEntry {
            method,
            runs,
            mean_epochs_to_drp: if method.is_learned() { mean_epochs(&counts) } else { None },
            epochs_to_drp: counts,
            optimization_factor: None,
            accuracy: mean(&accuracy_per_run).expect("at least one sampler"),
            accuracy_per_run,
            median_position_error: if scenario.is_decoupled() { None } else { mean(&medians) },
            mean_lambda1: mean(&lambdas),
            mean_final_distance: mean(&finals),
        });
    }
    let base = entries.iter().find(|e| e.method == Method::Ddpg).and_then(|e| e.mean_epochs_to_drp);
    for e in entries.iter_mut().filter(|e| e.method.is_learned()) {
        e.optimization_factor = optimization_factor(base, e.mean_epochs_to_drp);
    }
    Ok(ComparisonReport {
        schema: COMPARISON_SCHEMA.to_string(),
        scenario,
        threshold,
        base_method: Method::Ddpg,
        protocol: *protocol,
        targets: n_targets,
        target_seed,
        entries,
        missing,
    })
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String, HarnessError> {
    let csv_err = |e: String| HarnessError::Metrics(MetricsError::Csv(e));
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl ComparisonReport {
    pub fn entry(&self, method: Method) -> Option<&MethodEntry> {
        self.entries.iter().find(|e| e.method == method)
    }

    /// `method,runs,epochs_to_drp,optimization_factor`. The random baseline
    /// prints `n/a`, unreachable counts `unreachable`, undefined factors `/`,
    /// and missing methods `missing` in both columns.
    pub fn table1_csv(&self) -> Result<String, HarnessError> {
        let mut rows = vec![["method", "runs", "epochs_to_drp", "optimization_factor"].map(String::from).to_vec()];
        for e in self.entries.iter().filter(|e| e.method.is_learned()) {
            rows.push(vec![
                e.method.to_string(),
                e.runs.len().to_string(),
                e.mean_epochs_to_drp.map_or("unreachable".into(), |v| v.to_string()),
                e.optimization_factor.map_or("/".into(), |v| v.to_string()),
            ]);
        }
        for m in &self.missing {
            rows.push(vec![m.to_string(), "0".into(), "missing".into(), "missing".into()]);
        }
        if let Some(e) = self.entry(Method::Random) {
            rows.push(vec![e.method.to_string(), e.runs.len().to_string(), "n/a".into(), "n/a".into()]);
        }
        csv_string(rows)
    }

    /// `method,runs,accuracy_percent,targets,position_tol,median_position_error`.
    pub fn table2_csv(&self) -> Result<String, HarnessError> {
        let mut rows = vec![
            ["method", "runs", "accuracy_percent", "targets", "position_tol", "median_position_error"].map(String::from).to_vec(),
        ];
        for e in &self.entries {
            rows.push(vec![
                e.method.to_string(),
                e.runs.len().to_string(),
                e.accuracy.to_string(),
                self.targets.to_string(),
                self.protocol.position_tol.to_string(),
                e.median_position_error.map_or(String::new(), |v| v.to_string()),
            ]);
        }
        for m in &self.missing {
            rows.push(vec![m.to_string(), "0".into(), "missing".into(), self.targets.to_string(), self.protocol.position_tol.to_string(), String::new()]);
        }
        csv_string(rows)
    }

    /// Writes `table1.csv`, `table2.csv` and `comparison.json` into `out`.
    pub fn write(&self, out: &Path) -> Result<(), HarnessError> {
        write_text(&out.join("table1.csv"), &self.table1_csv()?)?;
        write_text(&out.join("table2.csv"), &self.table2_csv()?)?;
        write_json(&out.join("comparison.json"), self)
    }
}

/// Per-target accuracy log of one sampler, as CSV.
pub fn accuracy_log(scenario: Scenario, sampler: &Sampler, targets: &[Pose], protocol: &AccuracyProtocol) -> Result<String, HarnessError> {
    Ok(accuracy_csv(&evaluate(scenario, sampler, targets, protocol)?)?)
}
