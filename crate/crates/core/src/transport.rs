//! Transport-entropy certificates and the closed-form deviation and
//! correlation bounds built from them.
//!
//! A kernel satisfying a T₁ inequality with constant `C` and contracting in
//! W₁ with factor `λ̂ < 1` yields, for an `L`-Lipschitz reward averaged along
//! `N` steps,
//!
//! ```text
//! P[|avg - <r>| > bias + ε] <= 2 exp(-N ε² (1-λ̂)² / (2 C L²))
//! bias = L · W₁(P(x,·), μ_π) / (N (1-λ̂))
//! ```
//!
//! With `λ̂ = 0` and `bias = 0` this is the i.i.d. bound.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, spectral_norm, symmetrize, Matrix, PSD_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    Euclidean,
    Harris,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Certificate {
    #[serde(rename = "C")]
    pub c: f64,
    pub metric: MetricTag,
}

impl T1Certificate {
    pub fn new(c: f64, metric: MetricTag) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("transport constant {c} must be > 0")));
        }
        Ok(Self { c, metric })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub lambda_hat: f64,
}

impl ContractionCertificate {
    pub fn new(lambda_hat: f64) -> Result<Self> {
        check_contraction(lambda_hat)?;
        Ok(Self { lambda_hat })
    }
}

fn check_contraction(lambda_hat: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda_hat) {
        return Err(Error::InvalidContraction(lambda_hat));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFormula {
    /// Single-trajectory average under T₁ + W₁ contraction.
    MarkovTrajectory,
    /// Average of i.i.d. draws from a T₁ measure.
    Iid,
}

/// Everything needed to evaluate the tail bound for an `N`-step average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCertificate {
    pub bound: BoundFormula,
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda_hat: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub lipschitz: f64,
    pub bias: f64,
}

impl ConcentrationCertificate {
    pub fn markov(
        t1: T1Certificate,
        contraction: ContractionCertificate,
        n: usize,
        lipschitz: f64,
        bias: f64,
    ) -> Result<Self> {
        Self::validate(n, lipschitz, bias)?;
        Ok(Self {
            bound: BoundFormula::MarkovTrajectory,
            c: t1.c,
            lambda_hat: contraction.lambda_hat,
            n,
            lipschitz,
            bias,
        })
    }

    pub fn iid(c: f64, n: usize, lipschitz: f64) -> Result<Self> {
        T1Certificate::new(c, MetricTag::Euclidean)?;
        Self::validate(n, lipschitz, 0.0)?;
        Ok(Self {
            bound: BoundFormula::Iid,
            c,
            lambda_hat: 0.0,
            n,
            lipschitz,
            bias: 0.0,
        })
    }

    fn validate(n: usize, lipschitz: f64, bias: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be >= 1".into()));
        }
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::InvalidArgument(format!("Lipschitz constant {lipschitz} must be > 0")));
        }
        if !(bias.is_finite() && bias >= 0.0) {
            return Err(Error::InvalidArgument(format!("bias {bias} must be >= 0")));
        }
        Ok(())
    }

    pub fn tail_bound(&self, epsilon: f64) -> f64 {
        trajectory_deviation_bound(self, epsilon)
    }

    /// Deviation level the bound applies to: `bias + ε`.
    pub fn threshold(&self, epsilon: f64) -> f64 {
        self.bias + epsilon
    }

    pub fn tensorized_constant(&self) -> f64 {
        self.c * self.n as f64 / (1.0 - self.lambda_hat).powi(2)
    }
}

/// Standard-Gaussian kernels are T₁(1) under the Euclidean metric and
/// contract with factor `‖A‖₂`.
pub fn lds_certificate(a: &Matrix) -> Result<(T1Certificate, ContractionCertificate)> {
    let norm = spectral_norm(a)?;
    if norm >= 1.0 {
        return Err(Error::NotContractive { norm });
    }
    Ok((
        T1Certificate {
            c: 1.0,
            metric: MetricTag::Euclidean,
        },
        ContractionCertificate { lambda_hat: norm },
    ))
}

/// Closed-form W₂ between `N(m1, Σ1)` and `N(m2, Σ2)`.
pub fn gaussian_w2(m1: &[f64], s1: &Matrix, m2: &[f64], s2: &Matrix) -> Result<f64> {
    let n = m1.len();
    for (len, what) in [(m2.len(), n), (s1.rows(), n), (s1.cols(), n), (s2.rows(), n), (s2.cols(), n)] {
        if len != what {
            return Err(Error::DimensionMismatch {
                expected: what,
                got: len,
            });
        }
    }
    let mean_sq: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b) * (a - b)).sum();
    let a = s1.as_dmatrix();
    let b = s2.as_dmatrix();
    check_psd(a)?;
    check_psd(b)?;
    let root_a = psd_sqrt(a)?;
    let cross = symmetrize(&(&root_a * b * &root_a));
    let cross_root = psd_sqrt(&cross)?;
    let trace = a.trace() + b.trace() - 2.0 * cross_root.trace();
    Ok((mean_sq + trace.max(0.0)).sqrt())
}

fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum W1Relation {
    /// Value is W₂, which dominates W₁ by Jensen.
    UpperBoundFromW2,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Bound {
    pub value: f64,
    pub relation: W1Relation,
}

pub fn w1_bound_from_w2(w2: f64) -> W1Bound {
    W1Bound {
        value: w2,
        relation: W1Relation::UpperBoundFromW2,
    }
}

/// T₁ constant of the `N`-sample path law under the additive metric.
pub fn tensorized_constant(c: f64, lambda_hat: f64, n: usize) -> Result<f64> {
    check_contraction(lambda_hat)?;
    if !(c > 0.0) || n == 0 {
        return Err(Error::InvalidArgument("need C > 0 and N >= 1".into()));
    }
    Ok(c * n as f64 / (1.0 - lambda_hat).powi(2))
}

pub fn trajectory_deviation_bound(cert: &ConcentrationCertificate, epsilon: f64) -> f64 {
    let n = cert.n as f64;
    let gap = 1.0 - cert.lambda_hat;
    let exponent = n * epsilon * epsilon * gap * gap / (2.0 * cert.c * cert.lipschitz.powi(2));
    2.0 * (-exponent).exp()
}

/// Non-stationary start correction `W₁(P(x,·), μ_π) / (N (1-λ̂))`.
pub fn bias_term(w1_to_stationary: f64, n: usize, lambda_hat: f64) -> Result<f64> {
    check_contraction(lambda_hat)?;
    if w1_to_stationary < 0.0 || n == 0 {
        return Err(Error::InvalidArgument("need W₁ >= 0 and N >= 1".into()));
    }
    Ok(w1_to_stationary / (n as f64 * (1.0 - lambda_hat)))
}

pub fn iid_deviation_bound(c: f64, lipschitz: f64, n: usize, epsilon: f64) -> f64 {
    2.0 * (-(n as f64) * epsilon * epsilon / (2.0 * c * lipschitz * lipschitz)).exp()
}

/// `|Cov(f(x_n), f(x_{n+k}))| <= λ̂ᵏ C L² / (1 - λ̂²)`.
pub fn correlation_bound(c: f64, lambda_hat: f64, lipschitz: f64, lag: usize) -> Result<f64> {
    check_contraction(lambda_hat)?;
    Ok(lambda_hat.powi(lag as i32) * c * lipschitz * lipschitz / (1.0 - lambda_hat * lambda_hat))
}

pub const DEFAULT_LAMBDA_POINTS: usize = 41;

/// 41 points on `[-1, 1] / (√C L)`.
pub fn default_lambda_grid(c: f64, lipschitz: f64) -> Vec<f64> {
    let scale = 1.0 / (c.sqrt() * lipschitz);
    let half = (DEFAULT_LAMBDA_POINTS / 2) as f64;
    (0..DEFAULT_LAMBDA_POINTS)
        .map(|i| (i as f64 - half) / half * scale)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub lambda: f64,
    /// `log E e^{λ(f - f̄)} - λ² C L² / 2`, `None` when the empirical moment overflowed.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap: f64,
    pub points: Vec<GapPoint>,
    pub overflowed: Vec<f64>,
}

/// Empirical check of the sub-Gaussian moment bound dual to T₁(C). A
/// maximum `<= 0` up to sampling error is consistent with the certificate.
pub fn bobkov_goetze_gap(
    samples: &[f64],
    c: f64,
    lipschitz: f64,
    lambda_grid: &[f64],
) -> Result<GapReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let centered = DVector::from_iterator(samples.len(), samples.iter().map(|f| f - mean));
    let mut points = Vec::with_capacity(lambda_grid.len());
    let mut overflowed = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for &lambda in lambda_grid {
        let log_mgf = log_mean_exp(centered.iter().map(|d| lambda * d), m);
        let gap = log_mgf - 0.5 * lambda * lambda * c * lipschitz * lipschitz;
        if gap.is_finite() {
            best = best.max(gap);
            points.push(GapPoint { lambda, gap: Some(gap) });
        } else {
            overflowed.push(lambda);
            points.push(GapPoint { lambda, gap: None });
        }
    }
    if !best.is_finite() {
        return Err(Error::InvalidArgument(
            "empirical moment overflowed at every grid point".into(),
        ));
    }
    Ok(GapReport {
        gap: best,
        points,
        overflowed,
    })
}

fn log_mean_exp(values: impl Iterator<Item = f64> + Clone, m: f64) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return f64::NAN;
    }
    let sum: f64 = values.map(|v| (v - max).exp()).sum();
    max + sum.ln() - m.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lds_certificate_scalar() {
        let (t1, k) = lds_certificate(&Matrix::scalar(0.5)).unwrap();
        assert_eq!(t1.c, 1.0);
        assert_relative_eq!(k.lambda_hat, 0.5, max_relative = 1e-12);
        let (_, k) = lds_certificate(&Matrix::zeros(2)).unwrap();
        assert_eq!(k.lambda_hat, 0.0);
        assert!(matches!(
            lds_certificate(&Matrix::scalar(1.0)),
            Err(Error::NotContractive { .. })
        ));
    }

    #[test]
    fn w2_equal_covariance_is_mean_distance() {
        let i = Matrix::identity(2);
        assert_relative_eq!(gaussian_w2(&[0.0, 0.0], &i, &[3.0, 4.0], &i).unwrap(), 5.0, epsilon = 1e-12);
        assert_eq!(gaussian_w2(&[1.0, 2.0], &i, &[1.0, 2.0], &i).unwrap(), 0.0);
    }

    #[test]
    fn w2_one_dimensional() {
        let w = gaussian_w2(&[0.0], &Matrix::scalar(4.0), &[0.0], &Matrix::scalar(1.0)).unwrap();
        assert_relative_eq!(w, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn w2_rejects_indefinite() {
        let bad = Matrix::diagonal(&[1.0, -0.1]);
        let err = gaussian_w2(&[0.0, 0.0], &bad, &[0.0, 0.0], &Matrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
    }

    #[test]
    fn tensorization_arithmetic() {
        assert_relative_eq!(tensorized_constant(1.0, 0.5, 100).unwrap(), 400.0);
        assert_relative_eq!(tensorized_constant(1.0, 0.0, 1).unwrap(), 1.0);
        assert_relative_eq!(tensorized_constant(2.0, 0.9, 10).unwrap(), 2000.0, max_relative = 1e-12);
        assert!(tensorized_constant(1.0, 1.0, 10).is_err());
    }

    fn markov(c: f64, lambda: f64, n: usize, l: f64) -> ConcentrationCertificate {
        ConcentrationCertificate::markov(
            T1Certificate::new(c, MetricTag::Euclidean).unwrap(),
            ContractionCertificate::new(lambda).unwrap(),
            n,
            l,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn trajectory_bound_values() {
        let cert = markov(1.0, 0.5, 100, 1.0);
        assert_relative_eq!(cert.tail_bound(0.5), 2.0 * (-3.125f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(cert.tail_bound(0.5), 0.087874, max_relative = 1e-5);
        assert_eq!(cert.tail_bound(1e6), 0.0);
        assert_relative_eq!(cert.tail_bound(1e-12), 2.0, max_relative = 1e-12);
        let iid_like = markov(1.0, 0.0, 1, 1.0);
        assert_relative_eq!(iid_like.tail_bound(2.0), 0.27067, max_relative = 1e-4);
    }

    #[test]
    fn bias_values() {
        assert_relative_eq!(bias_term(2.0, 100, 0.5).unwrap(), 0.04);
        assert_eq!(bias_term(0.0, 17, 0.3).unwrap(), 0.0);
        assert_eq!(bias_term(1.0, 1, 0.0).unwrap(), 1.0);
        assert!(bias_term(1.0, 1, 1.0).is_err());
    }

    #[test]
    fn iid_values() {
        assert_relative_eq!(iid_deviation_bound(1.0, 1.0, 1, 2.0), 2.0 * (-2.0f64).exp());
        assert_relative_eq!(iid_deviation_bound(3.0, 0.7, 5, 1e-12), 2.0, max_relative = 1e-12);
        assert_relative_eq!(iid_deviation_bound(2.0, 1.0, 50, 0.5), 2.0 * (-3.125f64).exp());
    }

    #[test]
    fn correlation_values() {
        assert_relative_eq!(correlation_bound(1.0, 0.5, 1.0, 2).unwrap(), 1.0 / 3.0);
        assert_eq!(correlation_bound(2.0, 0.0, 3.0, 1).unwrap(), 0.0);
        assert_relative_eq!(correlation_bound(1.0, 0.5, 1.0, 0).unwrap(), 4.0 / 3.0);
        assert!(correlation_bound(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn gap_of_point_mass_is_zero() {
        let samples = vec![3.7; 1000];
        let grid = default_lambda_grid(2.0, 1.0);
        let r = bobkov_goetze_gap(&samples, 2.0, 1.0, &grid).unwrap();
        assert!(r.gap <= 0.0);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn gap_errors() {
        assert!(matches!(
            bobkov_goetze_gap(&[], 1.0, 1.0, &[0.5]),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn gap_reports_overflow_per_point() {
        let r = bobkov_goetze_gap(&[0.0, 1e308, -1e308], 1.0, 1.0, &[0.0, 10.0]).unwrap();
        assert_eq!(r.overflowed, vec![10.0]);
        assert_eq!(r.points[1].gap, None);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_lambda_grid(4.0, 1.0);
        assert_eq!(g.len(), 41);
        assert_relative_eq!(g[0], -0.5);
        assert_relative_eq!(g[40], 0.5);
        assert_eq!(g[20], 0.0);
    }
}
