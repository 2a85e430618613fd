//! Tanh multi-layer perceptrons with joint-limit output squashing.

mod adam;
mod dense;
mod file;

pub use adam::{Adam, AdamConfig};
pub use dense::{BatchCache, LayerGradients};
pub use file::{MlpDocument, MLP_SCHEMA};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Tape, Var};
use crate::kinematics::JointLimits;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("input has {got} entries, network expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("unsupported weight file schema {found:?}, expected {expected:?}")]
    Version { found: String, expected: String },
    #[error("weight file shape mismatch: {0}")]
    Shape(String),
    #[error("weight file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

/// How raw outputs of the last layer are mapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OutputMode {
    /// `mid + half_range · tanh(o)` per coordinate.
    SquashToLimits { limits: JointLimits },
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_mode: OutputMode,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, output_mode: OutputMode) -> Result<Self, ModelError> {
        let spec = MlpSpec { layer_sizes, hidden_activation: Activation::Tanh, output_mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn squashed(layer_sizes: Vec<usize>, limits: JointLimits) -> Result<Self, ModelError> {
        Self::new(layer_sizes, OutputMode::SquashToLimits { limits })
    }

    pub fn linear(layer_sizes: Vec<usize>) -> Result<Self, ModelError> {
        Self::new(layer_sizes, OutputMode::Linear)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layer_sizes.len() < 2 {
            return Err(ModelError::InvalidSpec("need at least input and output layers".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(ModelError::InvalidSpec("layer sizes must be positive".into()));
        }
        if let OutputMode::SquashToLimits { limits } = &self.output_mode {
            if limits.len() != self.output_size() {
                return Err(ModelError::InvalidSpec(format!(
                    "{} output limits for {} outputs",
                    limits.len(),
                    self.output_size()
                )));
            }
            limits.validate().map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of affine layers.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// The three architectures searched by default.
    pub fn default_architectures(input: usize, output: usize, mode: OutputMode) -> Vec<MlpSpec> {
        [vec![64, 64], vec![128, 128], vec![256, 128, 64]]
            .into_iter()
            .map(|hidden| {
                let mut sizes = vec![input];
                sizes.extend(hidden);
                sizes.push(output);
                MlpSpec { layer_sizes: sizes, hidden_activation: Activation::Tanh, output_mode: mode.clone() }
            })
            .collect()
    }
}

/// Weights `W_k` (out × in) and biases `b_k` of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub init_seed: u64,
}

impl MlpParams {
    /// Xavier-uniform weights, zero biases.
    pub fn init(spec: &MlpSpec, seed: u64) -> Result<Self, ModelError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(spec.depth());
        let mut biases = Vec::with_capacity(spec.depth());
        for pair in spec.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-bound..bound)));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(MlpParams { spec: spec.clone(), weights, biases, init_seed: seed })
    }

    /// Same shapes, every entry zero.
    pub fn zeros(spec: &MlpSpec) -> Result<Self, ModelError> {
        let mut p = Self::init(spec, 0)?;
        p.weights.iter_mut().for_each(|w| w.fill(0.0));
        Ok(p)
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Layer by layer: row-major weights, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<(), ModelError> {
        if flat.len() != self.param_count() {
            return Err(ModelError::Shape(format!("{} values for {} parameters", flat.len(), self.param_count())));
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, got: usize) -> Result<(), ModelError> {
        let expected = self.spec.input_size();
        if got == expected {
            Ok(())
        } else {
            Err(ModelError::Dimension { expected, got })
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_input(input.len())?;
        let mut h = Array1::from(input.to_vec());
        let last = self.spec.depth() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w.dot(&h) + b;
            h = if k < last { z.mapv(f64::tanh) } else { z };
        }
        Ok(squash_plain(&self.spec.output_mode, h.to_vec()))
    }

    /// Records every parameter as a tape leaf, weights before biases per layer,
    /// matching [`MlpParams::to_flat`].
    pub fn lift<'t>(&self, tape: &'t Tape) -> TapedParams<'t> {
        let mut weights = Vec::with_capacity(self.spec.depth());
        let mut biases = Vec::with_capacity(self.spec.depth());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let rows = w
                .outer_iter()
                .map(|row| row.iter().map(|&v| tape.lift(v).expect("parameters are finite")).collect())
                .collect();
            weights.push(rows);
            biases.push(b.iter().map(|&v| tape.lift(v).expect("parameters are finite")).collect());
        }
        TapedParams { spec: self.spec.clone(), weights, biases }
    }
}

/// Parameters recorded on a tape.
pub struct TapedParams<'t> {
    spec: MlpSpec,
    pub weights: Vec<Vec<Vec<Var<'t>>>>,
    pub biases: Vec<Vec<Var<'t>>>,
}

impl<'t> TapedParams<'t> {
    /// All leaves in flat order.
    pub fn leaves(&self) -> Vec<Var<'t>> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for row in w {
                out.extend(row.iter().copied());
            }
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn forward(&self, tape: &'t Tape, input: &[Var<'t>]) -> Result<Vec<Var<'t>>, ModelError> {
        let expected = self.spec.input_size();
        if input.len() != expected {
            return Err(ModelError::Dimension { expected, got: input.len() });
        }
        let mut h = input.to_vec();
        let last = self.spec.depth() - 1;
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z: Vec<Var<'t>> = w.iter().zip(b).map(|(row, &bias)| tape.dot(bias, row, &h)).collect();
            h = if k < last { z.into_iter().map(|v| v.tanh()).collect() } else { z };
        }
        Ok(match &self.spec.output_mode {
            OutputMode::Linear => h,
            OutputMode::SquashToLimits { limits } => {
                let (mid, half) = (limits.midpoints(), limits.half_ranges());
                h.into_iter().enumerate().map(|(i, o)| o.tanh() * half[i] + mid[i]).collect()
            }
        })
    }
}

fn squash_plain(mode: &OutputMode, raw: Vec<f64>) -> Vec<f64> {
    match mode {
        OutputMode::Linear => raw,
        OutputMode::SquashToLimits { limits } => {
            let (mid, half) = (limits.midpoints(), limits.half_ranges());
            raw.into_iter().enumerate().map(|(i, o)| mid[i] + half[i] * o.tanh()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(sizes: Vec<usize>) -> MlpSpec {
        let out = *sizes.last().unwrap();
        MlpSpec::squashed(sizes, JointLimits::symmetric(out, PI)).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_seeded() {
        let s = spec(vec![2, 8, 2]);
        assert_eq!(MlpParams::init(&s, 0).unwrap(), MlpParams::init(&s, 0).unwrap());
        assert_ne!(MlpParams::init(&s, 0).unwrap().weights, MlpParams::init(&s, 1).unwrap().weights);
    }

    #[test]
    fn weight_shapes_follow_layers() {
        let p = MlpParams::init(&spec(vec![2, 8, 2]), 3).unwrap();
        assert_eq!(p.weights[0].dim(), (8, 2));
        assert_eq!(p.weights[1].dim(), (2, 8));
        assert!(p.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zero_network_outputs_mid_range() {
        let p = MlpParams::zeros(&spec(vec![3, 5, 2])).unwrap();
        assert_eq!(p.forward(&[0.3, -1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn saturation_hits_the_bounds() {
        let mode = OutputMode::SquashToLimits { limits: JointLimits { lower: vec![0.0], upper: vec![2.0] } };
        assert_eq!(squash_plain(&mode, vec![f64::INFINITY]), vec![2.0]);
        assert_eq!(squash_plain(&mode, vec![f64::NEG_INFINITY]), vec![0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = MlpParams::init(&spec(vec![2, 4, 2]), 0).unwrap();
        assert!(matches!(p.forward(&[1.0]), Err(ModelError::Dimension { expected: 2, got: 1 })));
    }

    #[test]
    fn taped_forward_matches_plain() {
        let p = MlpParams::init(&spec(vec![3, 6, 4, 2]), 9).unwrap();
        let x = [0.4, -0.2, 0.9];
        let tape = Tape::new();
        let tp = p.lift(&tape);
        let xs = tape.lift_all(&x).unwrap();
        let y: Vec<f64> = tp.forward(&tape, &xs).unwrap().iter().map(|v| v.value()).collect();
        let plain = p.forward(&x).unwrap();
        for (a, b) in y.iter().zip(&plain) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_round_trip() {
        let mut p = MlpParams::init(&spec(vec![2, 3, 2]), 4).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.param_count());
        let q = p.clone();
        p.set_flat(&flat).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn specs_are_validated() {
        assert!(MlpSpec::linear(vec![3]).is_err());
        assert!(MlpSpec::linear(vec![3, 0, 1]).is_err());
        assert!(MlpSpec::squashed(vec![2, 3], JointLimits::symmetric(2, 1.0)).is_err());
    }
}
