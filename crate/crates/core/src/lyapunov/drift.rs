use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LyapunovFunction;
use crate::dynamics::{check_slds_hypothesis, SystemSpec};
use crate::error::{Error, Result};
use crate::rng;

/// `P V <= γ V + K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricDriftCertificate {
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(flatten)]
    pub v: LyapunovFunction,
}

impl GeometricDriftCertificate {
    pub fn bound_at(&self, v: f64) -> f64 {
        self.gamma * v + self.k
    }
}

/// `K = √(n + L² ϱ²)`.
pub fn geometric_drift_constant(n: usize, lipschitz_bound: f64, rho: f64) -> f64 {
    (n as f64 + lipschitz_bound * lipschitz_bound * rho * rho).sqrt()
}

pub fn slds_geometric_drift(
    spec: &SystemSpec,
    rho: f64,
    gamma: f64,
    lipschitz_bound: f64,
) -> Result<GeometricDriftCertificate> {
    let report = check_slds_hypothesis(spec, rho, gamma, lipschitz_bound)?;
    if let Some(j) = report.violating_region {
        return Err(Error::InvalidHypothesis(format!(
            "region {j} is neither contractive nor bounded"
        )));
    }
    Ok(GeometricDriftCertificate {
        gamma,
        k: geometric_drift_constant(spec.dim(), lipschitz_bound, rho),
        v: LyapunovFunction::Norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftPointEstimate {
    pub x: Vec<f64>,
    pub v: f64,
    pub pv_mean: f64,
    pub pv_stderr: f64,
    /// `pv_mean <= γ V + K + 3 stderr`, when an analytic certificate was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_certificate: Option<bool>,
}

/// Ordinary least squares `PV ≈ γ̂ V + K̂`. Heteroscedasticity is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftFit {
    pub gamma_hat: f64,
    pub k_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDriftReport {
    #[serde(flatten)]
    pub v: LyapunovFunction,
    pub samples_per_point: usize,
    pub seed: u64,
    pub points: Vec<DriftPointEstimate>,
    pub fit: Option<DriftFit>,
    pub certificate: Option<GeometricDriftCertificate>,
}

pub const MIN_DRIFT_SAMPLES: usize = 1000;

/// Monte Carlo estimate of `P V(x)` at each grid point and a linear fit
/// against `V(x)`. Point `i` uses the stream `derive_seed(seed, i)`.
pub fn empirical_drift_check(
    spec: &SystemSpec,
    v: LyapunovFunction,
    x_grid: &[Vec<f64>],
    samples_per_point: usize,
    seed: u64,
    certificate: Option<&GeometricDriftCertificate>,
) -> Result<EmpiricalDriftReport> {
    if samples_per_point < MIN_DRIFT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_DRIFT_SAMPLES} samples per point, got {samples_per_point}"
        )));
    }
    if x_grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    for x in x_grid {
        spec.check_dim(x)?;
    }
    let n = spec.dim();
    let points: Vec<DriftPointEstimate> = x_grid
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut stream = rng::stream(rng::derive_seed(seed, i as u64));
            let mut mean_x = vec![0.0; n];
            spec.drift_into(x, &mut mean_x);
            let mut y = vec![0.0; n];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..samples_per_point {
                rng::fill_standard_normal(&mut stream, &mut y);
                for (yi, mi) in y.iter_mut().zip(&mean_x) {
                    *yi += mi;
                }
                let val = v.eval(&y);
                sum += val;
                sum_sq += val * val;
            }
            let m = samples_per_point as f64;
            let mean = sum / m;
            let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
            let stderr = (var / m).sqrt();
            let vx = v.eval(x);
            DriftPointEstimate {
                x: x.clone(),
                v: vx,
                pv_mean: mean,
                pv_stderr: stderr,
                within_certificate: certificate
                    .map(|c| mean <= c.bound_at(vx) + 3.0 * stderr),
            }
        })
        .collect();
    let fit = ols_fit(&points);
    Ok(EmpiricalDriftReport {
        v,
        samples_per_point,
        seed,
        points,
        fit,
        certificate: certificate.copied(),
    })
}

fn ols_fit(points: &[DriftPointEstimate]) -> Option<DriftFit> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let vbar = points.iter().map(|p| p.v).sum::<f64>() / m;
    let ybar = points.iter().map(|p| p.pv_mean).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.v - vbar).powi(2)).sum();
    if sxx <= f64::EPSILON * vbar.abs().max(1.0) {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.v - vbar) * (p.pv_mean - ybar)).sum();
    let gamma_hat = sxy / sxx;
    Some(DriftFit {
        gamma_hat,
        k_hat: ybar - gamma_hat * vbar,
    })
}
