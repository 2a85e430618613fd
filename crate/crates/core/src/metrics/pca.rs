use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::models::{LayerGradients, MlpParams};

/// Per-layer gradient vectors of one epoch as equal-length columns; shorter
/// layers are zero-padded at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientMatrix {
    pub rows: usize,
    pub columns: Vec<Vec<f64>>,
}

impl GradientMatrix {
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        let columns = columns
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.resize(rows, 0.0);
                c
            })
            .collect();
        Ok(GradientMatrix { rows, columns })
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }
}

/// `g_k = vec(∇W_k) ⊕ ∇b_k`, checked against the parameter shapes.
pub fn gradient_matrix(params: &MlpParams, grads: &LayerGradients) -> Result<GradientMatrix, MetricsError> {
    if grads.weights.len() != params.weights.len() || grads.biases.len() != params.biases.len() {
        return Err(MetricsError::Shape(format!("{} gradient layers for {} layers", grads.weights.len(), params.weights.len())));
    }
    for (k, (g, w)) in grads.weights.iter().zip(&params.weights).enumerate() {
        if g.dim() != w.dim() || grads.biases[k].len() != params.biases[k].len() {
            return Err(MetricsError::Shape(format!("layer {k} gradient shape differs from its parameters")));
        }
    }
    GradientMatrix::from_columns(&grads.layer_vectors())
}

/// Normalized covariance eigenvalues, descending and summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainedVariance {
    pub ratios: Vec<f64>,
}

impl ExplainedVariance {
    pub fn first(&self) -> f64 {
        self.ratios[0]
    }

    /// First `k` ratios, zero-filled when there are fewer.
    pub fn top(&self, k: usize) -> Vec<f64> {
        (0..k).map(|i| self.ratios.get(i).copied().unwrap_or(0.0)).collect()
    }
}

/// Principal-component spectrum of the columns of `g`, treated as `L`
/// observations in `ℝⁿ`.
///
/// Columns are centered on their mean; the nonzero eigenvalues of the `n × n`
/// covariance equal those of the `L × L` Gram matrix of the centered columns,
/// which is what gets decomposed. Returns `L` ratios (at most `L − 1` of them
/// nonzero).
pub fn pca_explained(g: &GradientMatrix) -> Result<ExplainedVariance, MetricsError> {
    let l = g.cols();
    if l < 2 {
        return Err(MetricsError::TooFewColumns(l));
    }
    let n = g.rows;
    let mut centered = DMatrix::from_fn(n, l, |i, j| g.columns[j][i]);
    for i in 0..n {
        let mean = centered.row(i).sum() / l as f64;
        for j in 0..l {
            centered[(i, j)] -= mean;
        }
    }
    let gram = centered.transpose() * &centered;
    let scale = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(MetricsError::Degenerate);
    }
    let eig = nalgebra::SymmetricEigen::new(gram / scale);
    let mut values: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(MetricsError::Degenerate);
    }
    Ok(ExplainedVariance { ratios: values.into_iter().map(|v| v / total).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_are_zero_padded() {
        let g = GradientMatrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![4.0]]).unwrap();
        assert_eq!(g.columns[1], vec![4.0, 0.0, 0.0]);
        let zero = GradientMatrix::from_columns(&[vec![0.0; 3], vec![0.0; 2]]).unwrap();
        assert!(zero.columns.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rank_one_spectrum() {
        let g = GradientMatrix::from_columns(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0]]).unwrap();
        let ev = pca_explained(&g).unwrap();
        assert!((ev.ratios[0] - 1.0).abs() < 1e-12);
        assert!(ev.ratios[1..].iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn isotropic_pair() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let cols = vec![vec![c, s], vec![-s, c], vec![-c, -s], vec![s, -c]];
        let ev = pca_explained(&GradientMatrix::from_columns(&cols).unwrap()).unwrap();
        assert!((ev.ratios[0] - 0.5).abs() < 1e-12 && (ev.ratios[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let same = GradientMatrix::from_columns(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(pca_explained(&same), Err(MetricsError::Degenerate)));
        let one = GradientMatrix::from_columns(&[vec![1.0, 1.0]]).unwrap();
        assert!(pca_explained(&one).is_err());
    }
}
