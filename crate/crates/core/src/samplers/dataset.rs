use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::task::uniform_config;
use super::SamplerError;
use crate::kinematics::{JointConfig, Pose, RobotModel};

/// One labelled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub pose: Pose,
    pub theta: JointConfig,
}

/// FK-generated (pose, configuration) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<Pair>,
    pub seed: u64,
}

/// Draws `θ` uniformly in the joint limits and labels it with `FK(θ)`.
pub fn gen_dataset(model: &RobotModel, n: usize, seed: u64) -> Result<Dataset, SamplerError> {
    if n == 0 {
        return Err(SamplerError::Config("dataset size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = model.joint_limits();
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = uniform_config(&limits, &mut rng);
        let pose = model.fk(&theta)?;
        pairs.push(Pair { pose, theta });
    }
    Ok(Dataset { pairs, seed })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.pairs {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R, seed: u64) -> Result<Dataset, SamplerError> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| SamplerError::Config(format!("dataset line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let pair: Pair = serde_json::from_str(&line)
                .map_err(|e| SamplerError::Config(format!("dataset line {}: {e}", i + 1)))?;
            pairs.push(pair);
        }
        if pairs.is_empty() {
            return Err(SamplerError::Config("dataset is empty".into()));
        }
        Ok(Dataset { pairs, seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{pose_distance, PlanarChain};

    #[test]
    fn pairs_are_fk_consistent() {
        let model = RobotModel::Planar(PlanarChain::default());
        let d = gen_dataset(&model, 1000, 3).unwrap();
        assert_eq!(d.len(), 1000);
        for p in &d.pairs {
            assert!(pose_distance(&model.fk(&p.theta).unwrap(), &p.pose, 0.1).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let model = RobotModel::Planar(PlanarChain::default());
        let d = gen_dataset(&model, 20, 8).unwrap();
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 20);
        let back = Dataset::read_jsonl(&buf[..], 8).unwrap();
        assert_eq!(back, d);
    }
}
