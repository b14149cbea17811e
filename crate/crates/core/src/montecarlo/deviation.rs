//! Tail-probability experiments checking concentration certificates.
//!
//! Each replication is keyed by `derive_seed(master, index)` and results are
//! reduced in index order, so reports are identical for any worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::burn_in_sampler;
use super::stationary::MeanEstimate;
use super::stats::clopper_pearson;
use super::wasserstein::{empirical_w1, GroundMetric, WassersteinEstimate};
use crate::dynamics::{simulate_endpoint, SystemSpec};
use crate::error::{Error, Result};
use crate::reward::Reward;
use crate::rng::{self, derive_seed, mix64};
use crate::transport::{lds_certificate, ConcentrationCertificate, MetricTag, T1Certificate};
use crate::CODE_VERSION;

pub const REPORT_CONFIDENCE: f64 = 0.99;
pub const MIN_REPLICATIONS: usize = 100;
const BIAS_STREAM: u64 = 0xB1A5;
const DIAGNOSTIC_STREAM: u64 = 0xD1A6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleTrajectory,
    IidBurnIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub epsilon: f64,
    /// `bias + ε`
    pub threshold: f64,
    pub exceedances: usize,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    /// Upper Clopper–Pearson limit is at most the bound.
    pub pass: bool,
    /// Lower Clopper–Pearson limit exceeds the bound.
    pub violated: bool,
}

impl DeviationRow {
    fn new(epsilon: f64, threshold: f64, exceedances: usize, replications: usize, bound: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(exceedances, replications, REPORT_CONFIDENCE);
        Self {
            epsilon,
            threshold,
            exceedances,
            empirical: exceedances as f64 / replications as f64,
            ci_low,
            ci_high,
            bound,
            pass: ci_high <= bound,
            violated: ci_low > bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub value: f64,
    /// Ŵ₁ between one-step samples from `P(x0, ·)` and the reference batch.
    pub w1: WassersteinEstimate,
    pub reference_burn_in: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnInDiagnostic {
    /// Ŵ₁ between endpoints at the burn-in horizon and at a longer one.
    pub w1: WassersteinEstimate,
    pub burn_in: usize,
    pub long_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub experiment: ExperimentKind,
    pub spec_hash: String,
    pub code_version: String,
    pub master_seed: u64,
    pub reward: Reward,
    pub x0: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub replications: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub burn_in: Option<usize>,
    pub confidence: f64,
    pub target: MeanEstimate,
    pub certificate: ConcentrationCertificate,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bias: Option<BiasEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub burn_in_diagnostic: Option<BurnInDiagnostic>,
    pub rows: Vec<DeviationRow>,
    pub all_pass: bool,
    pub notes: Vec<String>,
}

impl DeviationReport {
    pub const CSV_HEADER: &'static str = "epsilon,empirical,ci_low,ci_high,bound,pass";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.epsilon, r.empirical, r.ci_low, r.ci_high, r.bound, r.pass
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationConfig {
    pub reward: Reward,
    pub x0: Vec<f64>,
    /// Trajectory length `N` (states `x_1..x_N` are averaged).
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub target: MeanEstimate,
    /// Size of the batches used to estimate `W₁(P(x0,·), μ_π)`.
    pub bias_samples: usize,
}

impl DeviationConfig {
    pub fn default_bias_samples(dim: usize) -> usize {
        if dim == 1 {
            1024
        } else {
            256
        }
    }
}

fn validate_common(spec: &SystemSpec, reward: &Reward, x0: &[f64], n: usize, eps: &[f64], m: usize, target: &MeanEstimate) -> Result<()> {
    spec.check_dim(x0)?;
    reward.validate(spec.dim())?;
    target.check_provenance()?;
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    if m < MIN_REPLICATIONS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_REPLICATIONS} replications, got {m}"
        )));
    }
    if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidArgument("epsilon grid must be nonempty and positive".into()));
    }
    Ok(())
}

/// `M` independent length-`N` runs of an LDS from `x0`, compared against
/// the single-trajectory bound at threshold `bias + ε`.
pub fn deviation_probability_experiment(spec: &SystemSpec, cfg: &DeviationConfig) -> Result<DeviationReport> {
    validate_common(spec, &cfg.reward, &cfg.x0, cfg.n, &cfg.epsilons, cfg.replications, &cfg.target)?;
    let a = match spec.matrices() {
        [a] if spec.is_lds() => a,
        _ => {
            return Err(Error::InvalidSystem(
                "single-trajectory bound needs an LDS contraction certificate".into(),
            ))
        }
    };
    let (t1, contraction) = lds_certificate(a)?;
    let lipschitz = cfg.reward.lipschitz();

    let bias = estimate_bias(spec, &cfg.x0, cfg.n, contraction.lambda_hat, lipschitz, cfg.bias_samples, cfg.seed)?;
    let certificate = ConcentrationCertificate::markov(t1, contraction, cfg.n, lipschitz, bias.value)?;

    let averages: Vec<f64> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|i| trajectory_average(spec, &cfg.reward, &cfg.x0, cfg.n, derive_seed(cfg.seed, i)))
        .collect();

    let rows = tabulate(&averages, cfg.target.value, &cfg.epsilons, |e| {
        (certificate.threshold(e), certificate.tail_bound(e))
    });
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(DeviationReport {
        experiment: ExperimentKind::SingleTrajectory,
        spec_hash: spec.hash(),
        code_version: CODE_VERSION.to_string(),
        master_seed: cfg.seed,
        reward: cfg.reward.clone(),
        x0: cfg.x0.clone(),
        n: cfg.n,
        replications: cfg.replications,
        burn_in: None,
        confidence: REPORT_CONFIDENCE,
        target: cfg.target.clone(),
        certificate,
        bias: Some(bias),
        burn_in_diagnostic: None,
        rows,
        all_pass,
        notes: vec![
            "bias = L * W1(P(x0,.), reference) / (N (1 - lambda_hat)); W1 is an empirical estimate against burn-in endpoints".into(),
        ],
    })
}

fn trajectory_average(spec: &SystemSpec, reward: &Reward, x0: &[f64], n: usize, seed: u64) -> f64 {
    let dim = spec.dim();
    let mut stream = rng::stream(seed);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; dim];
    let mut noise = vec![0.0; dim];
    let mut sum = 0.0;
    for _ in 0..n {
        rng::fill_standard_normal(&mut stream, &mut noise);
        spec.drift_into(&x, &mut next);
        for ((xi, ni), ei) in x.iter_mut().zip(&next).zip(&noise) {
            *xi = ni + ei;
        }
        sum += reward.eval(&x);
    }
    sum / n as f64
}

fn estimate_bias(
    spec: &SystemSpec,
    x0: &[f64],
    n: usize,
    lambda_hat: f64,
    lipschitz: f64,
    samples: usize,
    seed: u64,
) -> Result<BiasEstimate> {
    let sub = mix64(seed ^ BIAS_STREAM);
    let scale = crate::linalg::norm(x0).max(1.0);
    let horizon = if lambda_hat > 0.0 {
        ((1e-8 / scale).ln() / lambda_hat.ln()).ceil() as usize
    } else {
        1
    };
    let horizon = horizon.clamp(50, 10_000);
    let reference = burn_in_sampler(spec, x0, samples, horizon, derive_seed(sub, 0))?;
    let one_step = burn_in_sampler(spec, x0, samples, 1, derive_seed(sub, 1))?;
    let w1 = empirical_w1(&one_step.points, &reference.points, &GroundMetric::Euclidean)?;
    let value = lipschitz * crate::transport::bias_term(w1.value, n, lambda_hat)?;
    Ok(BiasEstimate {
        value,
        w1,
        reference_burn_in: horizon,
    })
}

fn tabulate(averages: &[f64], target: f64, epsilons: &[f64], at: impl Fn(f64) -> (f64, f64)) -> Vec<DeviationRow> {
    epsilons
        .iter()
        .map(|&e| {
            let (threshold, bound) = at(e);
            let k = averages.iter().filter(|&&avg| (avg - target).abs() > threshold).count();
            DeviationRow::new(e, threshold, k, averages.len(), bound)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidDeviationConfig {
    pub reward: Reward,
    pub x0: Vec<f64>,
    /// Endpoints averaged per replication.
    pub n: usize,
    pub replications: usize,
    pub burn_in: usize,
    pub epsilons: Vec<f64>,
    /// Transport constant of the stationary law.
    pub te_constant: f64,
    pub seed: u64,
    pub target: MeanEstimate,
    /// Batch size for the burn-in diagnostic (at most 1024).
    pub diagnostic_samples: usize,
}

/// Replication `i` averages the reward over `N` burn-in endpoints (chain `j`
/// seeded by `derive_seed(derive_seed(seed, i), j)`), compared with the
/// i.i.d. bound `2 exp(-N ε² / (2 L_TE L²))`.
pub fn iid_deviation_experiment(spec: &SystemSpec, cfg: &IidDeviationConfig) -> Result<DeviationReport> {
    validate_common(spec, &cfg.reward, &cfg.x0, cfg.n, &cfg.epsilons, cfg.replications, &cfg.target)?;
    T1Certificate::new(cfg.te_constant, MetricTag::Euclidean)?;
    let lipschitz = cfg.reward.lipschitz();
    let certificate = ConcentrationCertificate::iid(cfg.te_constant, cfg.n, lipschitz)?;

    let averages: Vec<f64> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|i| {
            let rep = derive_seed(cfg.seed, i);
            let mut sum = 0.0;
            for j in 0..cfg.n as u64 {
                let x = simulate_endpoint(spec, &cfg.x0, cfg.burn_in, derive_seed(rep, j))
                    .expect("dimension checked");
                sum += cfg.reward.eval(&x);
            }
            sum / cfg.n as f64
        })
        .collect();

    let rows = tabulate(&averages, cfg.target.value, &cfg.epsilons, |e| (e, certificate.tail_bound(e)));
    let all_pass = rows.iter().all(|r| r.pass);

    let sub = mix64(cfg.seed ^ DIAGNOSTIC_STREAM);
    let size = cfg.diagnostic_samples.clamp(1, super::wasserstein::ASSIGNMENT_LIMIT);
    let long_run = (10 * cfg.burn_in).max(cfg.burn_in + 100);
    let short = burn_in_sampler(spec, &cfg.x0, size, cfg.burn_in, derive_seed(sub, 0))?;
    let long = burn_in_sampler(spec, &cfg.x0, size, long_run, derive_seed(sub, 1))?;
    let diagnostic = BurnInDiagnostic {
        w1: empirical_w1(&short.points, &long.points, &GroundMetric::Euclidean)?,
        burn_in: cfg.burn_in,
        long_run,
    };

    Ok(DeviationReport {
        experiment: ExperimentKind::IidBurnIn,
        spec_hash: spec.hash(),
        code_version: CODE_VERSION.to_string(),
        master_seed: cfg.seed,
        reward: cfg.reward.clone(),
        x0: cfg.x0.clone(),
        n: cfg.n,
        replications: cfg.replications,
        burn_in: Some(cfg.burn_in),
        confidence: REPORT_CONFIDENCE,
        target: cfg.target.clone(),
        certificate,
        bias: None,
        burn_in_diagnostic: Some(diagnostic),
        rows,
        all_pass,
        notes: vec![
            "samples are burn-in endpoints, only approximately stationary; the i.i.d. bound assumes exact stationarity".into(),
            "burn_in_diagnostic is the W1 distance between endpoints at the burn-in and a longer horizon; it is diagnostic and not folded into the bound".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Matrix;
    use crate::montecarlo::{stationary_mean_reward, StationarySource};

    fn scalar(a: f64) -> SystemSpec {
        SystemSpec::lds(Matrix::scalar(a)).unwrap()
    }

    fn config(a: f64, n: usize, m: usize, eps: Vec<f64>, reward: Reward) -> DeviationConfig {
        let target = stationary_mean_reward(StationarySource::Lds(&Matrix::scalar(a)), &reward, 1e-3, 0).unwrap();
        DeviationConfig {
            reward,
            x0: vec![0.0],
            n,
            epsilons: eps,
            replications: m,
            seed: 42,
            target,
            bias_samples: 1024,
        }
    }

    #[test]
    fn huge_epsilon_has_no_exceedances() {
        let cfg = config(0.5, 50, 200, vec![50.0], Reward::Norm);
        let r = deviation_probability_experiment(&scalar(0.5), &cfg).unwrap();
        assert_eq!(r.rows[0].exceedances, 0);
        assert_eq!(r.rows[0].empirical, 0.0);
    }

    #[test]
    fn tiny_epsilon_bound_is_near_two() {
        let cfg = config(0.5, 50, 200, vec![1e-9], Reward::Norm);
        let r = deviation_probability_experiment(&scalar(0.5), &cfg).unwrap();
        assert!(r.rows[0].bound > 1.99);
        assert!(r.rows[0].pass);
    }

    #[test]
    fn single_step_gaussian_tail() {
        // A = 0, N = 1: avg = z ~ N(0,1); P(|z| > ε) = 2Φ(-ε) <= 2 e^{-ε²/2}
        let eps = vec![0.5, 1.0, 1.5, 2.0];
        let cfg = config(0.0, 1, 20_000, eps.clone(), Reward::Coordinate { index: 0 });
        let r = deviation_probability_experiment(&scalar(0.0), &cfg).unwrap();
        use statrs::distribution::{ContinuousCDF, Normal};
        let nrm = Normal::standard();
        for row in &r.rows {
            // bias is an empirical W1 at stationarity, small but nonzero
            let exact = 2.0 * nrm.cdf(-row.threshold);
            assert!(row.ci_low <= exact && exact <= row.ci_high, "{row:?} exact {exact}");
            assert!(row.bound >= exact);
        }
        assert!(r.all_pass);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut cfg = config(0.5, 10, 50, vec![0.1], Reward::Norm);
        assert!(deviation_probability_experiment(&scalar(0.5), &cfg).is_err());
        cfg.replications = 100;
        cfg.target = MeanEstimate {
            provenance: crate::montecarlo::MeanProvenance::Supplied { note: String::new() },
            ..cfg.target.clone()
        };
        assert!(matches!(
            deviation_probability_experiment(&scalar(0.5), &cfg),
            Err(Error::MissingProvenance)
        ));
        let cfg = config(0.5, 10, 100, vec![0.1], Reward::Norm);
        assert!(matches!(
            deviation_probability_experiment(&scalar(1.0), &cfg),
            Err(Error::NotContractive { .. })
        ));
    }

    #[test]
    fn report_reproducible_across_thread_counts() {
        let cfg = config(0.5, 100, 300, vec![0.1, 0.3], Reward::Norm);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| deviation_probability_experiment(&scalar(0.5), &cfg).unwrap())
        };
        let one = run(1);
        let many = run(6);
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
    }

    #[test]
    fn csv_rows() {
        let cfg = config(0.5, 20, 100, vec![0.5, 1.0], Reward::Norm);
        let r = deviation_probability_experiment(&scalar(0.5), &cfg).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], DeviationReport::CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.5,"));
    }

    #[test]
    fn iid_single_sample_matches_gaussian_tail() {
        let spec = scalar(0.0);
        let cfg = IidDeviationConfig {
            reward: Reward::Coordinate { index: 0 },
            x0: vec![0.0],
            n: 1,
            replications: 10_000,
            burn_in: 5,
            epsilons: vec![1e-9, 1.0, 2.0],
            te_constant: 1.0,
            seed: 3,
            target: MeanEstimate::supplied(0.0, "centered Gaussian").unwrap(),
            diagnostic_samples: 256,
        };
        let r = iid_deviation_experiment(&spec, &cfg).unwrap();
        assert!(r.rows[0].bound > 1.99);
        use statrs::distribution::{ContinuousCDF, Normal};
        let exact = 2.0 * Normal::standard().cdf(-1.0);
        assert!(r.rows[1].ci_low <= exact && exact <= r.rows[1].ci_high);
        assert!(r.all_pass);
        assert!(r.burn_in_diagnostic.is_some());
    }
}
