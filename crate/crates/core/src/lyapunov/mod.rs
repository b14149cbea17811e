//! Exponential-Lyapunov certificates for switched linear Gaussian systems.
//!
//! The chain is
//!
//! ```text
//! α̂ ──(Gaussian exponential moment)──▶ (β, C)     ∫ e^{α̂‖y‖²} P(x,dy) <= C e^{β‖x‖²}
//!   ──(split at ‖x‖ = R)─────────────▶ (η, Ĉ)     P W <= η W + Ĉ,  W = e^{α̂‖·‖²}
//!   ──(stationary moment)────────────▶ L_TE      (1 + ln(Ĉ / (1-η))) / α̂
//! ```
//!
//! plus the geometric drift `P V <= γ V + K` for `V = ‖·‖`, a quadrature
//! estimate of the minorization constant, and the Harris weighted metric.

mod drift;
mod harris;
mod minorization;

use serde::{Deserialize, Serialize};

pub use drift::{
    empirical_drift_check, geometric_drift_constant, slds_geometric_drift, DriftFit,
    DriftPointEstimate, EmpiricalDriftReport, GeometricDriftCertificate,
};
pub use harris::{harris_distance, HarrisMetricSpec};
pub use minorization::{minorization_beta, MinorizationConfig, MinorizationEstimate};

use crate::dynamics::{check_slds_hypothesis, Matrix, SystemSpec};
use crate::error::{Error, Result};
use crate::linalg::norm_sq;

/// Lyapunov functions used by drift checks and the Harris metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "V", rename_all = "snake_case")]
pub enum LyapunovFunction {
    /// `V(x) = ‖x‖₂`
    Norm,
    /// `W(x) = exp(α ‖x‖²)`
    ExpQuadratic { alpha: f64 },
}

impl LyapunovFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            LyapunovFunction::Norm => norm_sq(x).sqrt(),
            LyapunovFunction::ExpQuadratic { alpha } => (alpha * norm_sq(x)).exp(),
        }
    }
}

/// `∫ e^{α̂‖y‖²} P(x,dy) <= C e^{β‖x‖²}` for all `x`, with `β < α̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpLyapunovCertificate {
    pub alpha_hat: f64,
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ExpLyapunovCertificate {
    pub fn new(alpha_hat: f64, beta: f64, c: f64) -> Result<Self> {
        if !(alpha_hat.is_finite() && alpha_hat > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha_hat = {alpha_hat} must be > 0")));
        }
        if !(beta >= 0.0 && beta < alpha_hat) {
            return Err(Error::InvalidArgument(format!(
                "beta = {beta} must lie in [0, alpha_hat = {alpha_hat})"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("C = {c} must be > 0")));
        }
        Ok(Self { alpha_hat, beta, c })
    }
}

/// `P W <= η W + Ĉ` for `W(x) = exp(α̂ ‖x‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftPair {
    pub eta: f64,
    pub c_hat: f64,
    pub alpha_hat: f64,
    /// Squared split radius `R²` when the large-`C` branch was taken.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split_radius_sq: Option<f64>,
}

impl DriftPair {
    pub fn new(eta: f64, c_hat: f64, alpha_hat: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!("eta = {eta} must lie in (0, 1)")));
        }
        if !(c_hat.is_finite() && c_hat > 0.0 && alpha_hat > 0.0) {
            return Err(Error::InvalidArgument("need C_hat > 0 and alpha_hat > 0".into()));
        }
        Ok(Self {
            eta,
            c_hat,
            alpha_hat,
            split_radius_sq: None,
        })
    }

    /// Upper bound on `∫ W dμ_π`.
    pub fn stationary_moment_bound(&self) -> f64 {
        self.c_hat / (1.0 - self.eta)
    }
}

/// Exact `∫ e^{α‖y‖²} N(A x, Iₙ)(dy) = (1-2α)^{-n/2} exp(‖Ax‖² α / (1-2α))`.
pub fn stein_mgf(a: &Matrix, x: &[f64], alpha: f64) -> Result<f64> {
    Ok(log_stein_mgf(a, x, alpha)?.exp())
}

pub fn log_stein_mgf(a: &Matrix, x: &[f64], alpha: f64) -> Result<f64> {
    if alpha >= 0.5 {
        return Err(Error::DivergentMgf { alpha });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be > 0")));
    }
    let mean = a.mul_vec(x)?;
    let n = a.rows() as f64;
    let s = 1.0 - 2.0 * alpha;
    Ok(-0.5 * n * s.ln() + norm_sq(&mean) * alpha / s)
}

/// Admissible upper end `(1 - γ²) / 2` for `α̂`.
pub fn alpha_upper(gamma: f64) -> f64 {
    0.5 * (1.0 - gamma * gamma)
}

/// `β = γ² α̂ / (1-2α̂)`, `C = (1-2α̂)^{-n/2} exp(L² ϱ² α̂ / (1-2α̂))`.
pub fn slds_exp_lyapunov(
    spec: &SystemSpec,
    rho: f64,
    gamma: f64,
    lipschitz_bound: f64,
    alpha_hat: f64,
) -> Result<ExpLyapunovCertificate> {
    let report = check_slds_hypothesis(spec, rho, gamma, lipschitz_bound)?;
    if let Some(j) = report.violating_region {
        return Err(Error::InvalidHypothesis(format!(
            "region {j} is neither contractive nor bounded"
        )));
    }
    let upper = alpha_upper(gamma);
    if !(alpha_hat > 0.0 && alpha_hat < upper) {
        return Err(Error::InvalidAlpha {
            alpha: alpha_hat,
            upper,
        });
    }
    let s = 1.0 - 2.0 * alpha_hat;
    let n = spec.dim() as f64;
    let beta = gamma * gamma * alpha_hat / s;
    let c = s.powf(-0.5 * n) * (lipschitz_bound.powi(2) * rho * rho * alpha_hat / s).exp();
    ExpLyapunovCertificate::new(alpha_hat, beta, c)
}

/// Picks `(η, Ĉ)` with `η = 1/2` by splitting at `R² = ln(2C) / (α̂ - β)`;
/// for `C <= 1/2` the certificate already gives `η = Ĉ = C`.
pub fn drift_from_exp_lyapunov(cert: &ExpLyapunovCertificate) -> DriftPair {
    if cert.c <= 0.5 {
        return DriftPair {
            eta: cert.c,
            c_hat: cert.c,
            alpha_hat: cert.alpha_hat,
            split_radius_sq: None,
        };
    }
    let r_sq = (2.0 * cert.c).ln() / (cert.alpha_hat - cert.beta);
    DriftPair {
        eta: 0.5,
        c_hat: cert.c * (cert.beta * r_sq).exp(),
        alpha_hat: cert.alpha_hat,
        split_radius_sq: Some(r_sq),
    }
}

/// `L_TE = (1 + ln(Ĉ / (1-η))) / α̂`. The moment bound is floored at 1,
/// since `∫ e^{α̂‖x‖²} dμ >= 1` for any probability measure.
pub fn te_constant(drift: &DriftPair) -> f64 {
    let moment = drift.stationary_moment_bound().max(1.0);
    (1.0 + moment.ln()) / drift.alpha_hat
}

/// `Pⁿ W(x₀) <= ηⁿ W(x₀) + Ĉ (1-ηⁿ) / (1-η)`.
pub fn n_step_w_bound(drift: &DriftPair, w_x0: f64, n: usize) -> Result<f64> {
    if !(w_x0 >= 1.0) {
        return Err(Error::InvalidArgument(format!("W(x0) = {w_x0} must be >= 1")));
    }
    let eta_n = drift.eta.powi(n as i32);
    Ok(eta_n * w_x0 + drift.c_hat * (1.0 - eta_n) / (1.0 - drift.eta))
}

/// Coefficient `√(2 (1 + ln Pⁿ W(x₀)) / α̂)` multiplying `√Ent` in the
/// `n`-step transport inequality, using [`n_step_w_bound`] for `Pⁿ W`.
pub fn n_step_te_coefficient(drift: &DriftPair, w_x0: f64, n: usize) -> Result<f64> {
    let pw = n_step_w_bound(drift, w_x0, n)?;
    Ok((2.0 * (1.0 + pw.ln()) / drift.alpha_hat).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCheckPoint {
    pub x: Vec<f64>,
    pub log_pw: f64,
    pub log_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDriftReport {
    pub points: Vec<DriftCheckPoint>,
    pub all_hold: bool,
}

/// Closed-form check of `P W(x) <= η W(x) + Ĉ` at each grid point, in log
/// space so large `‖x‖` cannot overflow.
pub fn exact_drift_check(
    spec: &SystemSpec,
    drift: &DriftPair,
    grid: &[Vec<f64>],
) -> Result<ExactDriftReport> {
    let mut points = Vec::with_capacity(grid.len());
    for x in grid {
        spec.check_dim(x)?;
        let log_pw = log_stein_mgf(spec.matrix_at(x), x, drift.alpha_hat)?;
        let log_w = drift.alpha_hat * norm_sq(x);
        let a = drift.eta.ln() + log_w;
        let b = drift.c_hat.ln();
        let log_bound = a.max(b) + (-(a - b).abs()).exp().ln_1p();
        points.push(DriftCheckPoint {
            x: x.clone(),
            log_pw,
            log_bound,
            holds: log_pw <= log_bound + 1e-12 * log_bound.abs().max(1.0),
        });
    }
    let all_hold = points.iter().all(|p| p.holds);
    Ok(ExactDriftReport { points, all_hold })
}

/// Full derivation chain, serialized for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovChain {
    pub rho: f64,
    pub gamma: f64,
    pub lipschitz_bound: f64,
    pub alpha_hat: f64,
    pub exp_lyapunov: ExpLyapunovCertificate,
    pub drift: DriftPair,
    pub stationary_moment_bound: f64,
    pub te_constant: f64,
    pub geometric_drift: GeometricDriftCertificate,
}

pub fn certify_slds(
    spec: &SystemSpec,
    rho: f64,
    gamma: f64,
    lipschitz_bound: f64,
    alpha_hat: f64,
) -> Result<LyapunovChain> {
    let exp_lyapunov = slds_exp_lyapunov(spec, rho, gamma, lipschitz_bound, alpha_hat)?;
    let drift = drift_from_exp_lyapunov(&exp_lyapunov);
    let geometric_drift = slds_geometric_drift(spec, rho, gamma, lipschitz_bound)?;
    Ok(LyapunovChain {
        rho,
        gamma,
        lipschitz_bound,
        alpha_hat,
        exp_lyapunov,
        drift,
        stationary_moment_bound: drift.stationary_moment_bound(),
        te_constant: te_constant(&drift),
        geometric_drift,
    })
}
