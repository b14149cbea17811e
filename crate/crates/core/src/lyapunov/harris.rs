use serde::{Deserialize, Serialize};

use super::LyapunovFunction;

/// Weighted metric `d(x, y) = (2 + β* V(x) + β* V(y)) · 1[x ≠ y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarrisMetricSpec {
    pub beta_star: f64,
    #[serde(flatten)]
    pub v: LyapunovFunction,
}

impl Default for HarrisMetricSpec {
    fn default() -> Self {
        Self {
            beta_star: 1.0,
            v: LyapunovFunction::Norm,
        }
    }
}

pub fn harris_distance(metric: &HarrisMetricSpec, x: &[f64], y: &[f64]) -> f64 {
    if x == y {
        return 0.0;
    }
    2.0 + metric.beta_star * (metric.v.eval(x) + metric.v.eval(y))
}
