use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{KinematicsError, RobotModel};

pub const ROBOT_SCHEMA: &str = "kinform-robot/1";

/// On-disk robot description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotDocument {
    pub schema: String,
    pub robot: RobotModel,
}

pub fn save_robot(model: &RobotModel) -> String {
    let doc = RobotDocument { schema: ROBOT_SCHEMA.to_string(), robot: model.clone() };
    serde_json::to_string_pretty(&doc).expect("robot models always serialize")
}

pub fn load_robot(text: &str) -> Result<RobotModel, KinematicsError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(ROBOT_SCHEMA) => {}
        Some(other) => return Err(KinematicsError::Document(format!("unsupported schema {other:?}, expected {ROBOT_SCHEMA:?}"))),
        None => return Err(KinematicsError::Document("missing schema tag".into())),
    }
    let doc: RobotDocument = serde_json::from_value(value)?;
    doc.robot.validate()?;
    Ok(doc.robot)
}

/// Hex SHA-256 of the saved document.
pub fn robot_hash(model: &RobotModel) -> String {
    Sha256::digest(save_robot(model).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{AmmrModel, PlanarChain};

    #[test]
    fn round_trip_preserves_models() {
        for m in [RobotModel::Planar(PlanarChain::restricted()), RobotModel::Ammr(AmmrModel::default())] {
            assert_eq!(load_robot(&save_robot(&m)).unwrap(), m);
        }
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = save_robot(&RobotModel::Planar(PlanarChain::default())).replace("kinform-robot/1", "kinform-robot/9");
        assert!(matches!(load_robot(&text), Err(KinematicsError::Document(_))));
    }

    #[test]
    fn hash_distinguishes_models() {
        let a = robot_hash(&RobotModel::Planar(PlanarChain::default()));
        let b = robot_hash(&RobotModel::Planar(PlanarChain::restricted()));
        assert_eq!(a.len(), 64);
        assert_ne!(a, b);
    }
}
