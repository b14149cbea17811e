use serde::{Deserialize, Serialize};

use super::assignment;
use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::lyapunov::{harris_distance, HarrisMetricSpec};
use crate::transport::MetricTag;

pub const ASSIGNMENT_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum GroundMetric {
    Euclidean,
    Harris(HarrisMetricSpec),
}

impl GroundMetric {
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            GroundMetric::Euclidean => distance(x, y),
            GroundMetric::Harris(h) => harris_distance(h, x, y),
        }
    }

    pub fn tag(&self) -> MetricTag {
        match self {
            GroundMetric::Euclidean => MetricTag::Euclidean,
            GroundMetric::Harris(_) => MetricTag::Harris,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum W1Solver {
    Sorted1d,
    Assignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WassersteinEstimate {
    pub value: f64,
    pub sample_size: usize,
    pub metric: MetricTag,
    pub solver: W1Solver,
}

/// W₁ between the empirical measures of two equal-size point sets. For
/// equal weights an optimal coupling is a permutation, so this is the exact
/// assignment cost divided by `m`. One-dimensional Euclidean input takes the
/// sorted-matching path, which is optimal for convex costs on the line.
pub fn empirical_w1(a: &[Vec<f64>], b: &[Vec<f64>], metric: &GroundMetric) -> Result<WassersteinEstimate> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let m = a.len();
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    let dim = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    if dim == 1 && matches!(metric, GroundMetric::Euclidean) {
        return Ok(WassersteinEstimate {
            value: sorted_w1(a, b),
            sample_size: m,
            metric: MetricTag::Euclidean,
            solver: W1Solver::Sorted1d,
        });
    }
    Ok(WassersteinEstimate {
        value: assignment_w1(a, b, metric)?,
        sample_size: m,
        metric: metric.tag(),
        solver: W1Solver::Assignment,
    })
}

/// Exact assignment path regardless of dimension.
pub fn assignment_w1(a: &[Vec<f64>], b: &[Vec<f64>], metric: &GroundMetric) -> Result<f64> {
    let m = a.len();
    if m != b.len() {
        return Err(Error::SizeMismatch {
            left: m,
            right: b.len(),
        });
    }
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    if m > ASSIGNMENT_LIMIT {
        return Err(Error::SizeLimit {
            m,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    let mut costs = Vec::with_capacity(m * m);
    for x in a {
        for y in b {
            costs.push(metric.distance(x, y));
        }
    }
    Ok(assignment::solve(&costs, m).cost / m as f64)
}

pub fn sorted_w1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut xs: Vec<f64> = a.iter().map(|p| p[0]).collect();
    let mut ys: Vec<f64> = b.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn identical_sets() {
        let w = empirical_w1(&pts(&[0.0, 1.0]), &pts(&[1.0, 0.0]), &GroundMetric::Euclidean).unwrap();
        assert_eq!(w.value, 0.0);
        assert_eq!(w.solver, W1Solver::Sorted1d);
    }

    #[test]
    fn single_points() {
        let w = empirical_w1(&pts(&[0.0]), &pts(&[3.0]), &GroundMetric::Euclidean).unwrap();
        assert_eq!(w.value, 3.0);
    }

    #[test]
    fn two_point_brute_force() {
        // min(|0-1| + |2-3|, |0-3| + |2-1|) / 2
        let a = pts(&[0.0, 2.0]);
        let b = pts(&[1.0, 3.0]);
        assert_eq!(empirical_w1(&a, &b, &GroundMetric::Euclidean).unwrap().value, 1.0);
        assert_eq!(assignment_w1(&a, &b, &GroundMetric::Euclidean).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            empirical_w1(&pts(&[0.0]), &pts(&[0.0, 1.0]), &GroundMetric::Euclidean),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(matches!(
            empirical_w1(&[], &[], &GroundMetric::Euclidean),
            Err(Error::EmptySamples)
        ));
        let big: Vec<Vec<f64>> = (0..1025).map(|i| vec![i as f64, 0.0]).collect();
        assert!(matches!(
            empirical_w1(&big, &big, &GroundMetric::Euclidean),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn harris_metric_uses_assignment() {
        let h = GroundMetric::Harris(HarrisMetricSpec::default());
        let w = empirical_w1(&pts(&[0.0, 1.0]), &pts(&[1.0, 0.0]), &h).unwrap();
        assert_eq!(w.value, 0.0);
        assert_eq!(w.solver, W1Solver::Assignment);
        let w = empirical_w1(&pts(&[0.0]), &pts(&[1.0]), &h).unwrap();
        assert_eq!(w.value, 3.0);
    }
}
