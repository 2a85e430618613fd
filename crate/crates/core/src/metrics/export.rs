use serde::{Deserialize, Serialize};

use super::{epochs_to_drp, AccuracyReport, MetricsError, RewardDistribution};
use crate::samplers::TrainReport;

pub const REPORT_SCHEMA: &str = "kinform-report/1";

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String, MetricsError> {
    let bytes = writer.into_inner().map_err(|e| MetricsError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> MetricsError {
    MetricsError::Csv(e.to_string())
}

/// `epoch,loss,val_distance,drp,seconds`, one row per trained epoch.
pub fn drp_csv(report: &TrainReport) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss", "val_distance", "drp", "seconds"]).map_err(csv_err)?;
    for e in 0..report.epochs() {
        let secs = report.epoch_seconds.get(e).map_or(String::new(), |s| s.to_string());
        w.write_record([
            (e + 1).to_string(),
            report.epoch_loss[e].to_string(),
            report.val_distance[e].to_string(),
            report.drp[e].to_string(),
            secs,
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Explained-variance spectrum of every recorded epoch.
pub fn pca_series(report: &TrainReport) -> Result<Vec<Vec<f64>>, MetricsError> {
    if report.explained_variance.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(report.explained_variance.clone())
}

/// Mean first-component ratio over the recorded epochs.
pub fn mean_first_component(report: &TrainReport) -> Result<f64, MetricsError> {
    let series = pca_series(report)?;
    if series.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(series.iter().map(|r| r[0]).sum::<f64>() / series.len() as f64)
}

/// `epoch,lambda_1..lambda_k`.
pub fn pca_csv(report: &TrainReport, k: usize) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epoch".to_string()];
    header.extend((1..=k).map(|i| format!("lambda_{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (e, ratios) in pca_series(report)?.iter().enumerate() {
        let mut row = vec![(e + 1).to_string()];
        row.extend((0..k).map(|i| ratios.get(i).copied().unwrap_or(0.0).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}

/// `series,epoch,bin_low,bin_high,count,wasserstein`; the analytic reward
/// histogram comes first with an empty epoch.
pub fn rewards_csv(dist: &RewardDistribution) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "epoch", "bin_low", "bin_high", "count", "wasserstein"]).map_err(csv_err)?;
    let edges = &dist.bin_edges;
    for (i, c) in dist.analytic.iter().enumerate() {
        w.write_record(["analytic".to_string(), String::new(), edges[i].to_string(), edges[i + 1].to_string(), c.to_string(), String::new()])
            .map_err(csv_err)?;
    }
    for cp in &dist.checkpoints {
        for (i, c) in cp.counts.iter().enumerate() {
            w.write_record([
                "critic".to_string(),
                cp.epoch.to_string(),
                edges[i].to_string(),
                edges[i + 1].to_string(),
                c.to_string(),
                cp.wasserstein.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// `epoch,target,x,y,z,target_x,target_y,target_z`; epoch 0 is the untrained
/// network.
pub fn trajectory_csv(report: &TrainReport) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "target", "x", "y", "z", "target_x", "target_y", "target_z"]).map_err(csv_err)?;
    for (e, points) in report.traces.iter().enumerate() {
        for (t, p) in points.iter().enumerate() {
            let g = report.trace_targets[t];
            let row = [e.to_string(), t.to_string()]
                .into_iter()
                .chain(p.iter().chain(&g).map(|v| v.to_string()))
                .collect::<Vec<_>>();
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// `target,success,attempts,position_error,orientation_error_deg`.
pub fn accuracy_csv(report: &AccuracyReport) -> Result<String, MetricsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["target", "success", "attempts", "position_error", "orientation_error_deg"]).map_err(csv_err)?;
    for (i, t) in report.targets.iter().enumerate() {
        w.write_record([
            i.to_string(),
            t.success.to_string(),
            t.attempts.to_string(),
            t.position_error.to_string(),
            t.orientation_error_deg.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub schema: String,
    pub method: String,
    pub seed: u64,
    pub epochs: usize,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub final_drp: f64,
    pub epochs_to_drp98: Option<usize>,
    pub mean_lambda1: Option<f64>,
    pub total_seconds: f64,
}

pub fn summarize(report: &TrainReport) -> ReportSummary {
    ReportSummary {
        schema: REPORT_SCHEMA.to_string(),
        method: report.method.clone(),
        seed: report.seed,
        epochs: report.epochs(),
        initial_distance: report.initial_distance,
        final_distance: report.final_distance(),
        final_drp: report.drp.last().copied().unwrap_or(0.0),
        epochs_to_drp98: epochs_to_drp(&report.drp, 98.0),
        mean_lambda1: mean_first_component(report).ok(),
        total_seconds: report.epoch_seconds.iter().sum(),
    }
}
