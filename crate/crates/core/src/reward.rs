use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;

/// Lipschitz test functions averaged along trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "r", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reward {
    /// `‖x‖₂`, 1-Lipschitz.
    Norm,
    /// `x_i`, 1-Lipschitz.
    Coordinate { index: usize },
    /// `w · x`, Lipschitz constant `‖w‖₂`.
    Linear { weights: Vec<f64> },
}

impl Reward {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Reward::Norm => norm(x),
            Reward::Coordinate { index } => x[*index],
            Reward::Linear { weights } => weights.iter().zip(x).map(|(w, v)| w * v).sum(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Reward::Norm | Reward::Coordinate { .. } => 1.0,
            Reward::Linear { weights } => norm(weights),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Reward::Norm => Ok(()),
            Reward::Coordinate { index } if *index < dim => Ok(()),
            Reward::Coordinate { index } => Err(Error::InvalidArgument(format!(
                "coordinate {index} out of range for dimension {dim}"
            ))),
            Reward::Linear { weights } if weights.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                got: weights.len(),
            }),
            Reward::Linear { weights } => {
                if weights.iter().all(|w| w.is_finite()) && norm(weights) > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("linear reward needs finite, nonzero weights".into()))
                }
            }
        }
    }

    /// Parses `{"r": "..."}`, reporting unrecognized tags as [`Error::UnknownReward`].
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let tag = value
            .get("r")
            .and_then(|t| t.as_str())
            .ok_or_else(|| Error::UnknownReward(value.to_string()))?;
        if !matches!(tag, "norm" | "coordinate" | "linear") {
            return Err(Error::UnknownReward(tag.to_string()));
        }
        serde_json::from_value(value.clone()).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_lipschitz() {
        assert_eq!(Reward::Norm.eval(&[3.0, -4.0]), 5.0);
        assert_eq!(Reward::Coordinate { index: 1 }.eval(&[3.0, -4.0]), -4.0);
        let lin = Reward::Linear { weights: vec![3.0, 4.0] };
        assert_eq!(lin.eval(&[1.0, 1.0]), 7.0);
        assert_eq!(lin.lipschitz(), 5.0);
    }

    #[test]
    fn json_tags() {
        let v = serde_json::json!({"r": "coordinate", "index": 0});
        assert_eq!(Reward::from_json(&v).unwrap(), Reward::Coordinate { index: 0 });
        let v = serde_json::json!({"r": "entropy"});
        assert!(matches!(Reward::from_json(&v), Err(Error::UnknownReward(t)) if t == "entropy"));
    }

    #[test]
    fn validation() {
        assert!(Reward::Coordinate { index: 2 }.validate(2).is_err());
        assert!(Reward::Linear { weights: vec![0.0] }.validate(1).is_err());
        assert!(Reward::Linear { weights: vec![1.0] }.validate(2).is_err());
    }
}
