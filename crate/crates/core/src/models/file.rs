use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{MlpParams, MlpSpec, ModelError};

pub const MLP_SCHEMA: &str = "kinform-mlp/1";

/// Weight file layout: row-major flattened weights per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpDocument {
    pub schema: String,
    pub spec: MlpSpec,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

impl MlpParams {
    pub fn to_document(&self) -> MlpDocument {
        MlpDocument {
            schema: MLP_SCHEMA.to_string(),
            spec: self.spec.clone(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
            seed: self.init_seed,
        }
    }

    pub fn save(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("parameters always serialize")
    }

    pub fn load(text: &str) -> Result<MlpParams, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("schema").and_then(|s| s.as_str()).unwrap_or("");
        if found != MLP_SCHEMA {
            return Err(ModelError::Version { found: found.to_string(), expected: MLP_SCHEMA.to_string() });
        }
        let doc: MlpDocument = serde_json::from_value(value)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: MlpDocument) -> Result<MlpParams, ModelError> {
        doc.spec.validate()?;
        let depth = doc.spec.depth();
        if doc.weights.len() != depth || doc.biases.len() != depth {
            return Err(ModelError::Shape(format!("expected {depth} layers")));
        }
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        for (k, pair) in doc.spec.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let w = Array2::from_shape_vec((fan_out, fan_in), doc.weights[k].clone())
                .map_err(|_| ModelError::Shape(format!("layer {k}: weights need {} values", fan_in * fan_out)))?;
            if doc.biases[k].len() != fan_out {
                return Err(ModelError::Shape(format!("layer {k}: biases need {fan_out} values")));
            }
            weights.push(w);
            biases.push(Array1::from(doc.biases[k].clone()));
        }
        let params = MlpParams { spec: doc.spec, weights, biases, init_seed: doc.seed };
        if !params.is_finite() {
            return Err(ModelError::Shape("non-finite parameter".into()));
        }
        Ok(params)
    }
}
