use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{burn_in_sampler, Provenance, SampleBatch};
use super::wasserstein::{empirical_w1, GroundMetric, ASSIGNMENT_LIMIT};
use crate::dynamics::{simulate, SystemSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, mix64};

/// Steps whose Ŵ₁ is within this factor of the noise floor are dropped.
pub const PLATEAU_FACTOR: f64 = 3.0;
const FLOOR_STREAM: u64 = 0xF100_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDistance {
    pub n: usize,
    pub w1: f64,
    pub used_in_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionFit {
    pub kappa_hat: f64,
    pub noise_floor: f64,
    pub steps: Vec<StepDistance>,
    pub sample_size: usize,
    pub seed: u64,
}

/// Estimates the geometric rate of `W₁(Pⁿ(x0,·), μ_π)` by a log-linear fit
/// over the steps that stay above the plateau.
///
/// The noise floor is Ŵ₁ between `reference` and a second, independent batch
/// of the same provenance (`floor_reference`, or regenerated from the
/// reference's burn-in metadata).
pub fn contraction_rate_fit(
    spec: &SystemSpec,
    x0: &[f64],
    n_max: usize,
    reference: &SampleBatch,
    floor_reference: Option<&SampleBatch>,
    metric: &GroundMetric,
    seed: u64,
) -> Result<ContractionFit> {
    spec.check_dim(x0)?;
    let m = reference.len();
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    if m > ASSIGNMENT_LIMIT {
        return Err(Error::SizeLimit {
            m,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("need n_max >= 2 to fit a rate".into()));
    }

    let regenerated;
    let floor_batch = match floor_reference {
        Some(b) => b,
        None => {
            let (Provenance::BurnInEndpoints, Some(t), Some(origin)) =
                (reference.provenance, reference.burn_in, reference.origin.as_ref())
            else {
                return Err(Error::InvalidArgument(
                    "reference lacks burn-in metadata; pass a floor reference batch".into(),
                ));
            };
            regenerated = burn_in_sampler(spec, origin, m, t, mix64(seed ^ FLOOR_STREAM))?;
            &regenerated
        }
    };
    let noise_floor = empirical_w1(&reference.points, &floor_batch.points, metric)?.value;

    let paths = (0..m as u64)
        .into_par_iter()
        .map(|i| simulate(spec, x0, n_max, derive_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;

    let distances = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let at_n: Vec<Vec<f64>> = paths.iter().map(|p| p.states[n].clone()).collect();
            empirical_w1(&at_n, &reference.points, metric).map(|w| w.value)
        })
        .collect::<Result<Vec<_>>>()?;

    // leading run of steps above the plateau
    let cutoff = PLATEAU_FACTOR * noise_floor;
    let used = distances.iter().take_while(|&&w| w > cutoff).count();
    let steps: Vec<StepDistance> = distances
        .iter()
        .enumerate()
        .map(|(i, &w1)| StepDistance {
            n: i + 1,
            w1,
            used_in_fit: i < used,
        })
        .collect();
    if used < 2 {
        return Err(Error::NoSignal);
    }
    let xs: Vec<f64> = (1..=used).map(|n| n as f64).collect();
    let ys: Vec<f64> = distances[..used].iter().map(|w| w.ln()).collect();
    let slope = ols_slope(&xs, &ys);
    Ok(ContractionFit {
        kappa_hat: slope.exp(),
        noise_floor,
        steps,
        sample_size: m,
        seed,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Matrix;

    #[test]
    fn scalar_rate() {
        let spec = SystemSpec::lds(Matrix::scalar(0.5)).unwrap();
        let reference = burn_in_sampler(&spec, &[0.0], 512, 60, 1).unwrap();
        let fit = contraction_rate_fit(&spec, &[20.0], 15, &reference, None, &GroundMetric::Euclidean, 2).unwrap();
        assert!((0.4..=0.6).contains(&fit.kappa_hat), "{fit:?}");
    }

    #[test]
    fn one_step_mixing_has_no_signal() {
        let spec = SystemSpec::lds(Matrix::scalar(0.0)).unwrap();
        let reference = burn_in_sampler(&spec, &[0.0], 256, 10, 1).unwrap();
        let err = contraction_rate_fit(&spec, &[20.0], 10, &reference, None, &GroundMetric::Euclidean, 2).unwrap_err();
        assert_eq!(err, Error::NoSignal);
    }

    #[test]
    fn analytic_reference_needs_floor_batch() {
        let spec = SystemSpec::lds(Matrix::scalar(0.5)).unwrap();
        let cov = crate::montecarlo::lds_stationary_covariance(&Matrix::scalar(0.5)).unwrap();
        let reference = crate::montecarlo::gaussian_batch(&cov, 256, 1).unwrap();
        assert!(contraction_rate_fit(&spec, &[20.0], 10, &reference, None, &GroundMetric::Euclidean, 2).is_err());
        let floor = crate::montecarlo::gaussian_batch(&cov, 256, 2).unwrap();
        let fit = contraction_rate_fit(&spec, &[20.0], 12, &reference, Some(&floor), &GroundMetric::Euclidean, 2).unwrap();
        assert!((0.4..=0.6).contains(&fit.kappa_hat));
    }
}
