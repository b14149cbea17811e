//! Stationary-law oracles for linear Gaussian systems.

use serde::{Deserialize, Serialize};

use super::sampling::{gaussian_batch, SampleBatch};
use super::stats::MeanSummary;
use crate::dynamics::Matrix;
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::reward::Reward;

const FIXED_POINT_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 10_000_000;
pub const MC_BUDGET: usize = 1_000_000;
/// Confidence level of reported CLT intervals.
pub const MEAN_CONFIDENCE: f64 = 0.99;

/// Solves `Σ = A Σ Aᵀ + I` by fixed-point iteration from `Σ₀ = I`.
pub fn lds_stationary_covariance(a: &Matrix) -> Result<Matrix> {
    let norm = spectral_norm(a)?;
    if norm >= 1.0 {
        return Err(Error::NotContractive { norm });
    }
    let a = a.as_dmatrix();
    let n = a.nrows();
    let identity = nalgebra::DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let mut sigma = identity.clone();
    for _ in 0..MAX_ITERATIONS {
        let next = a * &sigma * &at + &identity;
        let residual = (&next - &sigma).norm();
        sigma = next;
        if residual < FIXED_POINT_TOL {
            break;
        }
    }
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    Matrix::from_dmatrix(sigma)
}

/// `‖A Σ Aᵀ + I - Σ‖_F`.
pub fn lyapunov_residual(a: &Matrix, sigma: &Matrix) -> f64 {
    let a = a.as_dmatrix();
    let s = sigma.as_dmatrix();
    let n = a.nrows();
    (a * s * a.transpose() + nalgebra::DMatrix::<f64>::identity(n, n) - s).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MeanProvenance {
    /// `σ √(2/π)` for `|x|` under `N(0, σ²)`.
    HalfNormalClosedForm,
    /// Odd reward under a centered Gaussian.
    Symmetry,
    MonteCarlo { samples: usize, source: String },
    Supplied { note: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Half-width of the 99% CLT interval (0 for closed forms).
    pub half_width: f64,
    pub provenance: MeanProvenance,
}

impl MeanEstimate {
    pub fn supplied(value: f64, note: impl Into<String>) -> Result<Self> {
        let note = note.into();
        if note.trim().is_empty() {
            return Err(Error::MissingProvenance);
        }
        Ok(Self {
            value,
            stderr: 0.0,
            half_width: 0.0,
            provenance: MeanProvenance::Supplied { note },
        })
    }

    pub fn check_provenance(&self) -> Result<()> {
        match &self.provenance {
            MeanProvenance::Supplied { note } if note.trim().is_empty() => Err(Error::MissingProvenance),
            _ => Ok(()),
        }
    }
}

pub enum StationarySource<'a> {
    /// LDS with this system matrix; stationary law `N(0, Σ)`.
    Lds(&'a Matrix),
    /// Approximately stationary samples, e.g. burn-in endpoints.
    Batch(&'a SampleBatch),
}

/// `<r>_{μ_π}` by closed form when available, otherwise by Monte Carlo,
/// failing if the 99% half-width exceeds `precision`.
pub fn stationary_mean_reward(
    source: StationarySource<'_>,
    reward: &Reward,
    precision: f64,
    seed: u64,
) -> Result<MeanEstimate> {
    match source {
        StationarySource::Lds(a) => {
            reward.validate(a.rows())?;
            let sigma = lds_stationary_covariance(a)?;
            match reward {
                Reward::Norm if a.rows() == 1 => {
                    let sd = sigma.get(0, 0).sqrt();
                    Ok(MeanEstimate {
                        value: sd * (2.0 / std::f64::consts::PI).sqrt(),
                        stderr: 0.0,
                        half_width: 0.0,
                        provenance: MeanProvenance::HalfNormalClosedForm,
                    })
                }
                Reward::Coordinate { .. } | Reward::Linear { .. } => Ok(MeanEstimate {
                    value: 0.0,
                    stderr: 0.0,
                    half_width: 0.0,
                    provenance: MeanProvenance::Symmetry,
                }),
                Reward::Norm => {
                    let batch = gaussian_batch(&sigma, MC_BUDGET, seed)?;
                    mc_mean(&batch, reward, precision, "analytic_gaussian")
                }
            }
        }
        StationarySource::Batch(batch) => {
            if batch.is_empty() {
                return Err(Error::EmptySamples);
            }
            reward.validate(batch.dim())?;
            mc_mean(batch, reward, precision, "sample_batch")
        }
    }
}

fn mc_mean(batch: &SampleBatch, reward: &Reward, precision: f64, source: &str) -> Result<MeanEstimate> {
    let s = MeanSummary::of(batch.points.iter().map(|p| reward.eval(p)));
    let half_width = s.half_width(MEAN_CONFIDENCE);
    if half_width > precision {
        return Err(Error::PrecisionUnreachable {
            requested: precision,
            achieved: half_width,
            budget: batch.len(),
        });
    }
    Ok(MeanEstimate {
        value: s.mean,
        stderr: s.stderr,
        half_width,
        provenance: MeanProvenance::MonteCarlo {
            samples: batch.len(),
            source: source.to_string(),
        },
    })
}
