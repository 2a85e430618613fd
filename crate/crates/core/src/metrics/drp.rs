use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Mean validation distance per epoch, with the untrained baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrpHistory {
    pub initial: f64,
    /// `distances[e - 1]` belongs to epoch `e`.
    pub distances: Vec<f64>,
}

impl DrpHistory {
    pub fn new(initial: f64, distances: Vec<f64>) -> Result<Self, MetricsError> {
        if !(initial > 0.0) {
            return Err(MetricsError::ZeroBaseline);
        }
        Ok(DrpHistory { initial, distances })
    }

    pub fn epochs(&self) -> usize {
        self.distances.len()
    }

    /// DRP at `epoch`, where epoch 0 is the untrained network.
    pub fn drp(&self, epoch: usize) -> Result<f64, MetricsError> {
        match epoch {
            0 => Ok(0.0),
            e if e <= self.distances.len() => drp_percent(self.initial, self.distances[e - 1]),
            e => Err(MetricsError::EpochOutOfRange { epoch: e, epochs: self.distances.len() }),
        }
    }

    /// DRP of epochs `1..=epochs()`.
    pub fn series(&self) -> Vec<f64> {
        self.distances.iter().map(|&d| (1.0 - d / self.initial) * 100.0).collect()
    }
}

/// `(1 − d / d₀) · 100`.
pub fn drp_percent(initial: f64, distance: f64) -> Result<f64, MetricsError> {
    if initial == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((1.0 - distance / initial) * 100.0)
}

/// First epoch whose DRP reaches `threshold` and stays there for the next two
/// epochs as well. `drp[i]` belongs to epoch `i + 1`; all three epochs must
/// have been observed, so a crossing in the last two epochs does not count.
pub fn epochs_to_drp(drp: &[f64], threshold: f64) -> Option<usize> {
    drp.windows(3).position(|w| w.iter().all(|&v| v >= threshold)).map(|i| i + 1)
}

/// Mean over seeds; unreachable as soon as any seed is.
pub fn mean_epochs(counts: &[Option<usize>]) -> Option<f64> {
    if counts.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for c in counts {
        sum += (*c)? as f64;
    }
    Some(sum / counts.len() as f64)
}

/// `base / method`, undefined when either side is unreachable.
pub fn optimization_factor(base_epochs: Option<f64>, method_epochs: Option<f64>) -> Option<f64> {
    match (base_epochs, method_epochs) {
        (Some(b), Some(m)) if b.is_finite() && m.is_finite() && m > 0.0 => Some(b / m),
        _ => None,
    }
}
