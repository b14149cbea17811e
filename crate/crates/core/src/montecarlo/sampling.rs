use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, simulate_endpoint, Matrix, SystemSpec};
use crate::error::{Error, Result};
use crate::linalg::gaussian_factor;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SingleTrajectory,
    BurnInEndpoints,
    AnalyticGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub points: Vec<Vec<f64>>,
    pub provenance: Provenance,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub burn_in: Option<usize>,
    /// Start state of the chains, for trajectory-based provenance.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub origin: Option<Vec<f64>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Sample covariance (divisor `m - 1`).
    pub fn covariance(&self) -> Matrix {
        let n = self.dim();
        let m = self.len() as f64;
        let mut mean = vec![0.0; n];
        for p in &self.points {
            for (acc, v) in mean.iter_mut().zip(p) {
                *acc += v / m;
            }
        }
        let mut cov = nalgebra::DMatrix::zeros(n, n);
        for p in &self.points {
            let d = DVector::from_iterator(n, p.iter().zip(&mean).map(|(a, b)| a - b));
            cov += &d * d.transpose();
        }
        Matrix::from_dmatrix(cov / (m - 1.0).max(1.0)).expect("finite samples")
    }

    /// A single trajectory's states `x_1..x_N` (the start state is dropped).
    pub fn from_trajectory(spec: &SystemSpec, x0: &[f64], n_steps: usize, seed: u64) -> Result<Self> {
        let traj = simulate(spec, x0, n_steps, seed)?;
        Ok(Self {
            points: traj.states.into_iter().skip(1).collect(),
            provenance: Provenance::SingleTrajectory,
            master_seed: seed,
            burn_in: None,
            origin: Some(x0.to_vec()),
        })
    }
}

/// Endpoints of `m` independent length-`t` runs from `x0`; run `i` uses
/// `derive_seed(seed, i)`.
pub fn burn_in_sampler(spec: &SystemSpec, x0: &[f64], m: usize, t: usize, seed: u64) -> Result<SampleBatch> {
    spec.check_dim(x0)?;
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    let points = (0..m as u64)
        .into_par_iter()
        .map(|i| simulate_endpoint(spec, x0, t, rng::derive_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        points,
        provenance: Provenance::BurnInEndpoints,
        master_seed: seed,
        burn_in: Some(t),
        origin: Some(x0.to_vec()),
    })
}

/// `m` draws from `N(0, Σ)`.
pub fn gaussian_batch(cov: &Matrix, m: usize, seed: u64) -> Result<SampleBatch> {
    if !cov.is_square() {
        return Err(Error::NotSquare {
            rows: cov.rows(),
            cols: cov.cols(),
        });
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let factor = Matrix::from_dmatrix(gaussian_factor(cov.as_dmatrix())?)?;
    let n = cov.rows();
    let mut stream = rng::stream(seed);
    let mut z = vec![0.0; n];
    let points = (0..m)
        .map(|_| {
            rng::fill_standard_normal(&mut stream, &mut z);
            let mut x = vec![0.0; n];
            factor.mul_vec_into(&z, &mut x);
            x
        })
        .collect();
    Ok(SampleBatch {
        points,
        provenance: Provenance::AnalyticGaussian,
        master_seed: seed,
        burn_in: None,
        origin: None,
    })
}
