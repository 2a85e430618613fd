//! Batched forward and reverse passes over whole minibatches.
//!
//! Mathematically identical to the taped forward in the parent module; the
//! tape is kept for the kinematic part of the losses, where the graph is
//! irregular, and for checking this path.

use ndarray::{Array1, Array2, Axis};

use super::{MlpParams, ModelError, OutputMode};

/// Intermediate values of a batched forward pass, one row per sample.
#[derive(Debug, Clone)]
pub struct BatchCache {
    /// Layer inputs: `layers[0]` is the batch itself, `layers[k]` the tanh
    /// output of hidden layer `k`.
    layers: Vec<Array2<f64>>,
    /// Last-layer affine output before squashing.
    raw: Array2<f64>,
    output: Array2<f64>,
}

impl BatchCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Per-layer parameter gradients, shaped like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl LayerGradients {
    pub fn zeros_like(params: &MlpParams) -> Self {
        LayerGradients {
            weights: params.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: params.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    /// Same flat order as [`MlpParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn from_flat(params: &MlpParams, flat: &[f64]) -> Result<Self, ModelError> {
        let mut g = Self::zeros_like(params);
        if flat.len() != params.param_count() {
            return Err(ModelError::Shape(format!("{} gradient values for {} parameters", flat.len(), params.param_count())));
        }
        let mut it = flat.iter().copied();
        for (w, b) in g.weights.iter_mut().zip(g.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(g)
    }

    /// `g_k = vec(∇W_k) ⊕ ∇b_k` for every layer `k`.
    pub fn layer_vectors(&self) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().chain(b.iter()).copied().collect())
            .collect()
    }

    pub fn add_scaled(&mut self, other: &LayerGradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.scaled_add(scale, b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.scaled_add(scale, b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl MlpParams {
    /// Forward pass for a batch with one sample per row.
    pub fn forward_batch(&self, inputs: &Array2<f64>) -> Result<BatchCache, ModelError> {
        self.check_input(inputs.ncols())?;
        let last = self.spec.depth() - 1;
        let mut layers = Vec::with_capacity(self.spec.depth());
        layers.push(inputs.clone());
        let mut raw = Array2::zeros((0, 0));
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = layers[k].dot(&w.t()) + b;
            if k < last {
                layers.push(z.mapv(f64::tanh));
            } else {
                raw = z;
            }
        }
        let output = match &self.spec.output_mode {
            OutputMode::Linear => raw.clone(),
            OutputMode::SquashToLimits { limits } => {
                let (mid, half) = (limits.midpoints(), limits.half_ranges());
                let mut out = raw.mapv(f64::tanh);
                for mut row in out.rows_mut() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = mid[j] + half[j] * *v;
                    }
                }
                out
            }
        };
        Ok(BatchCache { layers, raw, output })
    }

    /// Pulls `∂L/∂output` back to parameter gradients and `∂L/∂input`.
    pub fn backward_batch(&self, cache: &BatchCache, d_output: &Array2<f64>) -> (LayerGradients, Array2<f64>) {
        let mut delta = match &self.spec.output_mode {
            OutputMode::Linear => d_output.clone(),
            OutputMode::SquashToLimits { limits } => {
                let half = limits.half_ranges();
                let mut d = d_output.clone();
                for (mut row, raw_row) in d.rows_mut().into_iter().zip(cache.raw.rows()) {
                    for (j, v) in row.iter_mut().enumerate() {
                        let t = raw_row[j].tanh();
                        *v *= half[j] * (1.0 - t * t);
                    }
                }
                d
            }
        };
        let depth = self.spec.depth();
        let mut weights = vec![Array2::zeros((0, 0)); depth];
        let mut biases = vec![Array1::zeros(0); depth];
        for k in (0..depth).rev() {
            let input = &cache.layers[k];
            weights[k] = delta.t().dot(input);
            biases[k] = delta.sum_axis(Axis(0));
            let mut back = delta.dot(&self.weights[k]);
            if k > 0 {
                // tanh'(z) = 1 − h²
                back.zip_mut_with(input, |d, &h| *d *= 1.0 - h * h);
            }
            delta = back;
        }
        (LayerGradients { weights, biases }, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::super::MlpSpec;
    use super::*;
    use crate::autodiff::Tape;
    use crate::kinematics::JointLimits;
    use ndarray::array;

    #[test]
    fn batch_forward_matches_single() {
        let spec = MlpSpec::squashed(vec![2, 5, 3, 2], JointLimits::symmetric(2, 2.0)).unwrap();
        let p = MlpParams::init(&spec, 11).unwrap();
        let x = array![[0.1, 0.2], [-1.0, 0.5], [2.0, -0.3]];
        let cache = p.forward_batch(&x).unwrap();
        for (i, row) in x.rows().into_iter().enumerate() {
            let single = p.forward(row.as_slice().unwrap()).unwrap();
            for j in 0..2 {
                assert!((cache.output()[[i, j]] - single[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn batch_backward_matches_tape() {
        let spec = MlpSpec::squashed(vec![3, 4, 4, 2], JointLimits { lower: vec![-1.0, 0.0], upper: vec![2.0, 3.0] }).unwrap();
        let p = MlpParams::init(&spec, 5).unwrap();
        let x = array![[0.3, -0.2, 0.8], [1.1, 0.4, -0.6]];
        // L = Σ_i c · y_i with a fixed coefficient matrix c
        let c = array![[0.7, -1.3], [0.2, 0.9]];
        let cache = p.forward_batch(&x).unwrap();
        let (grads, d_in) = p.backward_batch(&cache, &c);

        let tape = Tape::new();
        let tp = p.lift(&tape);
        let mut total = tape.constant(0.0);
        let mut inputs = Vec::new();
        for (i, row) in x.rows().into_iter().enumerate() {
            let xs = tape.lift_all(row.as_slice().unwrap()).unwrap();
            let y = tp.forward(&tape, &xs).unwrap();
            for j in 0..2 {
                total = total + y[j] * c[[i, j]];
            }
            inputs.push(xs);
        }
        let g = tape.backward(total).unwrap();
        let taped = g.wrt_all(&tp.leaves());
        for (a, b) in grads.to_flat().iter().zip(&taped) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        for (i, xs) in inputs.iter().enumerate() {
            for (j, v) in xs.iter().enumerate() {
                assert!((d_in[[i, j]] - g.wrt(*v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn layer_vectors_concatenate_weights_then_biases() {
        let g = LayerGradients {
            weights: vec![array![[1.0, 2.0], [3.0, 4.0]], array![[5.0, 6.0]]],
            biases: vec![array![7.0, 8.0], array![9.0]],
        };
        assert_eq!(g.layer_vectors(), vec![vec![1.0, 2.0, 3.0, 4.0, 7.0, 8.0], vec![5.0, 6.0, 9.0]]);
    }
}
