use serde::{Deserialize, Serialize};

use super::stats::{normal_critical, MeanSummary};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::reward::Reward;
use crate::transport::correlation_bound;

pub const AUTOCOV_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagCovariance {
    pub lag: usize,
    pub covariance: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovarianceReport {
    pub reward: Reward,
    pub length: usize,
    pub lags: Vec<LagCovariance>,
}

impl AutocovarianceReport {
    /// Attaches `λ̂ᵏ C L² / (1 - λ̂²)` to every lag.
    pub fn with_bounds(mut self, c: f64, lambda_hat: f64) -> Result<Self> {
        let l = self.reward.lipschitz();
        for lag in &mut self.lags {
            lag.bound = Some(correlation_bound(c, lambda_hat, l, lag.lag)?);
        }
        Ok(self)
    }
}

/// Sample autocovariance of `f(x_t)` at lags `0..=k_max`, with standard
/// errors from `⌊√len⌋` non-overlapping batch means of the lag products.
pub fn empirical_autocovariance(trajectory: &Trajectory, reward: &Reward, k_max: usize) -> Result<AutocovarianceReport> {
    let values: Vec<f64> = trajectory.states.iter().map(|x| reward.eval(x)).collect();
    let len = values.len();
    let needed = 10 * k_max.max(1);
    if len < needed {
        return Err(Error::InsufficientLength { len, k_max, needed });
    }
    let mean = values.iter().sum::<f64>() / len as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let z = normal_critical(AUTOCOV_CONFIDENCE);
    let lags = (0..=k_max)
        .map(|k| {
            let products: Vec<f64> = centered[..len - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .collect();
            let covariance = products.iter().sum::<f64>() / products.len() as f64;
            let batches = (products.len() as f64).sqrt().floor().max(2.0) as usize;
            let size = products.len() / batches;
            let stderr = MeanSummary::of(
                products
                    .chunks_exact(size)
                    .take(batches)
                    .map(|c| c.iter().sum::<f64>() / size as f64),
            )
            .stderr;
            LagCovariance {
                lag: k,
                covariance,
                stderr,
                ci_low: covariance - z * stderr,
                ci_high: covariance + z * stderr,
                bound: None,
            }
        })
        .collect();
    Ok(AutocovarianceReport {
        reward: reward.clone(),
        length: len,
        lags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, Matrix, SystemSpec};

    #[test]
    fn white_noise_lags_vanish() {
        let spec = SystemSpec::lds(Matrix::scalar(0.0)).unwrap();
        let t = simulate(&spec, &[0.0], 100_000, 21).unwrap();
        let r = empirical_autocovariance(&t, &Reward::Coordinate { index: 0 }, 10).unwrap();
        assert!((r.lags[0].covariance - 1.0).abs() < 0.02);
        for lag in &r.lags[1..] {
            assert!(lag.covariance.abs() <= 3.0 * lag.stderr, "{lag:?}");
        }
    }

    #[test]
    fn ar1_first_lags() {
        let spec = SystemSpec::lds(Matrix::scalar(0.5)).unwrap();
        let t = simulate(&spec, &[0.0], 100_000, 5).unwrap();
        let r = empirical_autocovariance(&t, &Reward::Coordinate { index: 0 }, 5)
            .unwrap()
            .with_bounds(1.0, 0.5)
            .unwrap();
        for lag in &r.lags {
            let exact = 0.5f64.powi(lag.lag as i32) * 4.0 / 3.0;
            assert!((lag.covariance - exact).abs() <= 4.0 * lag.stderr, "{lag:?} vs {exact}");
            assert!(lag.covariance.abs() <= lag.bound.unwrap() + 3.0 * lag.stderr);
        }
    }

    #[test]
    fn too_short() {
        let spec = SystemSpec::lds(Matrix::scalar(0.5)).unwrap();
        let t = simulate(&spec, &[0.0], 98, 5).unwrap();
        assert!(matches!(
            empirical_autocovariance(&t, &Reward::Norm, 10),
            Err(Error::InsufficientLength { .. })
        ));
    }
}
