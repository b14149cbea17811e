use std::fmt::Write as _;

use concentrix::dynamics::{check_slds_hypothesis, spectral_norm, SystemSpec};
use concentrix::lyapunov::{certify_slds, empirical_drift_check, exact_drift_check, LyapunovChain, LyapunovFunction};
use concentrix::montecarlo::{
    burn_in_sampler, contraction_rate_fit, deviation_probability_experiment, iid_deviation_experiment,
    lds_stationary_covariance, normal_critical, stationary_mean_reward, DeviationConfig, IidDeviationConfig,
    MeanEstimate, MeanSummary, StationarySource,
};
use concentrix::rng::{derive_seed, mix64};
use concentrix::transport::{lds_certificate, ConcentrationCertificate};
use concentrix::{Error, Reward};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::CliError;

const TARGET_STREAM: u64 = 0x7A26E7;
const MOMENT_STREAM: u64 = 0x303E27;
const REFERENCE_STREAM: u64 = 0x2EFE2E;
const MOMENT_CONFIDENCE: f64 = 0.99;

/// Result of one pipeline run, before it is wrapped in a report.
pub struct Outcome {
    pub pass: bool,
    pub result: Value,
    pub csv: String,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn check_epsilons(eps: &[f64]) -> Result<(), CliError> {
    if eps.is_empty() {
        return Err(CliError::Config("epsilon grid is empty".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(CliError::Config(format!("epsilon {e} must be > 0")));
    }
    Ok(())
}

fn lds_matrix(spec: &SystemSpec) -> Option<&concentrix::dynamics::Matrix> {
    match spec.matrices() {
        [a] if spec.is_lds() => Some(a),
        _ => None,
    }
}

fn slds_chain(
    spec: &SystemSpec,
    hypothesis: Option<HypothesisParams>,
    alpha_hat: Option<f64>,
) -> Result<LyapunovChain, CliError> {
    let h = hypothesis.ok_or_else(|| CliError::Config("params.hypothesis {rho, gamma, L} is required".into()))?;
    let alpha_hat = alpha_hat.ok_or_else(|| CliError::Config("params.alpha_hat is required".into()))?;
    Ok(certify_slds(spec, h.rho, h.gamma, h.lipschitz_bound, alpha_hat)?)
}

fn target_estimate(
    spec: &SystemSpec,
    reward: &Reward,
    supplied: Option<TargetMean>,
    precision: f64,
    x0: &[f64],
    burn_in: usize,
    samples: usize,
    seed: u64,
) -> Result<MeanEstimate, CliError> {
    if let Some(t) = supplied {
        return Ok(MeanEstimate::supplied(t.value, t.note)?);
    }
    let seed = mix64(seed ^ TARGET_STREAM);
    match lds_matrix(spec) {
        Some(a) => Ok(stationary_mean_reward(StationarySource::Lds(a), reward, precision, seed)?),
        None => {
            let batch = burn_in_sampler(spec, x0, samples, burn_in, seed)?;
            Ok(stationary_mean_reward(StationarySource::Batch(&batch), reward, precision, seed)?)
        }
    }
}

fn bound_curve(cert: &ConcentrationCertificate, eps: &[f64]) -> (Value, String) {
    let mut csv = String::from("epsilon,bound\n");
    let rows: Vec<Value> = eps
        .iter()
        .map(|&e| {
            let b = cert.tail_bound(e);
            let _ = writeln!(csv, "{e},{b}");
            json!({"epsilon": e, "bound": b})
        })
        .collect();
    (Value::Array(rows), csv)
}

pub fn certify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: CertifyParams = cfg.params()?;
    let spec = &cfg.system;
    p.reward.validate(spec.dim())?;
    check_epsilons(&p.epsilons)?;
    let l = p.reward.lipschitz();
    let (result, csv) = if let Some(a) = lds_matrix(spec) {
        let n = p.n.ok_or_else(|| CliError::Config("params.N is required for an lds".into()))?;
        let (t1, k) = lds_certificate(a)?;
        let cert = ConcentrationCertificate::markov(t1, k, n, l, 0.0)?;
        let (curve, csv) = bound_curve(&cert, &p.epsilons);
        let result = json!({
            "kind": "lds",
            "t1": t1,
            "contraction": k,
            "certificate": cert,
            "tensorized_constant": cert.tensorized_constant(),
            "bound_curve": curve,
        });
        (result, csv)
    } else {
        let h = p
            .hypothesis
            .ok_or_else(|| CliError::Config("params.hypothesis {rho, gamma, L} is required".into()))?;
        let report = check_slds_hypothesis(spec, h.rho, h.gamma, h.lipschitz_bound)?;
        let chain = slds_chain(spec, p.hypothesis, p.alpha_hat)?;
        let mut result = json!({
            "kind": "slds",
            "hypothesis": report,
            "chain": chain,
        });
        let mut csv = String::new();
        // the i.i.d. bound curve needs a sample count
        if let Some(n) = p.n {
            let cert = ConcentrationCertificate::iid(chain.te_constant, n, l)?;
            let (curve, c) = bound_curve(&cert, &p.epsilons);
            result["iid_certificate"] = to_value(&cert);
            result["bound_curve"] = curve;
            csv = c;
        }
        (result, csv)
    };
    Ok(Outcome {
        pass: true,
        result,
        csv,
    })
}

pub fn verify_deviation(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: DeviationParams = cfg.params()?;
    let spec = &cfg.system;
    check_epsilons(&p.epsilons)?;
    p.reward.validate(spec.dim())?;
    spec.check_dim(&p.x0)?;
    let report = match p.experiment {
        DeviationExperiment::SingleTrajectory => {
            if lds_matrix(spec).is_none() {
                return Err(CliError::Config(
                    "single_trajectory verification needs an lds; use iid_burn_in for an slds".into(),
                ));
            }
            let target = target_estimate(spec, &p.reward, p.target_mean, p.precision, &p.x0, 0, 0, cfg.seed)?;
            deviation_probability_experiment(
                spec,
                &DeviationConfig {
                    reward: p.reward,
                    x0: p.x0,
                    n: p.n,
                    epsilons: p.epsilons,
                    replications: p.replications,
                    seed: cfg.seed,
                    target,
                    bias_samples: p
                        .bias_samples
                        .unwrap_or_else(|| DeviationConfig::default_bias_samples(spec.dim())),
                },
            )?
        }
        DeviationExperiment::IidBurnIn => {
            let burn_in = p
                .burn_in
                .ok_or_else(|| CliError::Config("params.burn_in is required for iid_burn_in".into()))?;
            let te_constant = match (p.te_constant, lds_matrix(spec)) {
                (Some(c), _) => c,
                (None, _) if p.hypothesis.is_some() => slds_chain(spec, p.hypothesis, p.alpha_hat)?.te_constant,
                // N(0, Σ) satisfies T₁ with constant ‖Σ‖₂
                (None, Some(a)) => spectral_norm(&lds_stationary_covariance(a)?)?,
                (None, None) => {
                    return Err(CliError::Config(
                        "iid_burn_in on an slds needs te_constant or hypothesis + alpha_hat".into(),
                    ))
                }
            };
            let target = target_estimate(
                spec,
                &p.reward,
                p.target_mean,
                p.precision,
                &p.x0,
                burn_in,
                p.target_samples,
                cfg.seed,
            )?;
            iid_deviation_experiment(
                spec,
                &IidDeviationConfig {
                    reward: p.reward,
                    x0: p.x0,
                    n: p.n,
                    replications: p.replications,
                    burn_in,
                    epsilons: p.epsilons,
                    te_constant,
                    seed: cfg.seed,
                    target,
                    diagnostic_samples: p.diagnostic_samples,
                },
            )?
        }
    };
    Ok(Outcome {
        pass: report.all_pass,
        csv: report.to_csv(),
        result: to_value(&report),
    })
}

/// `points` values of `t ∈ [-r, r]`, placed on the coordinate axes in turn.
fn axis_grid(dim: usize, g: &GridParams) -> Result<Vec<Vec<f64>>, CliError> {
    if g.points == 0 || !(g.radius.is_finite() && g.radius >= 0.0) {
        return Err(CliError::Config("grid needs points >= 1 and a finite radius >= 0".into()));
    }
    let step = if g.points > 1 {
        2.0 * g.radius / (g.points - 1) as f64
    } else {
        0.0
    };
    Ok((0..g.points)
        .map(|k| {
            let mut x = vec![0.0; dim];
            x[k % dim] = -g.radius + step * k as f64;
            x
        })
        .collect())
}

pub fn verify_lyapunov(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: LyapunovParams = cfg.params()?;
    let spec = &cfg.system;
    let chain = slds_chain(spec, Some(p.hypothesis), Some(p.alpha_hat))?;
    let grid = axis_grid(spec.dim(), &p.grid)?;
    let exact = exact_drift_check(spec, &chain.drift, &grid)?;
    let mut pass = exact.all_hold;
    let mut csv = String::from("x,log_pw,log_bound,holds\n");
    for pt in &exact.points {
        let x: Vec<String> = pt.x.iter().map(f64::to_string).collect();
        let _ = writeln!(csv, "{},{},{},{}", x.join(";"), pt.log_pw, pt.log_bound, pt.holds);
    }
    let mut result = json!({"chain": chain, "exact_drift": exact});

    if let Some(m) = p.moment {
        let x0 = m.x0.unwrap_or_else(|| vec![0.0; spec.dim()]);
        let batch = burn_in_sampler(spec, &x0, m.samples, m.burn_in, mix64(cfg.seed ^ MOMENT_STREAM))?;
        let s = MeanSummary::of(
            batch
                .points
                .iter()
                .map(|x| (chain.alpha_hat * x.iter().map(|v| v * v).sum::<f64>()).exp()),
        );
        let upper = s.mean + normal_critical(MOMENT_CONFIDENCE) * s.stderr;
        let holds = upper <= chain.stationary_moment_bound;
        pass &= holds;
        result["moment"] = json!({
            "samples": m.samples,
            "burn_in": m.burn_in,
            "mean": s.mean,
            "stderr": s.stderr,
            "upper": upper,
            "confidence": MOMENT_CONFIDENCE,
            "bound": chain.stationary_moment_bound,
            "holds": holds,
        });
    }

    if let Some(d) = p.empirical_drift {
        let grid = axis_grid(spec.dim(), &d.grid)?;
        let report = empirical_drift_check(
            spec,
            LyapunovFunction::Norm,
            &grid,
            d.samples_per_point,
            derive_seed(cfg.seed, 1),
            Some(&chain.geometric_drift),
        )?;
        pass &= report.points.iter().all(|pt| pt.within_certificate == Some(true));
        result["empirical_drift"] = to_value(&report);
    }
    Ok(Outcome { pass, result, csv })
}

pub fn contraction(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: ContractionParams = cfg.params()?;
    let spec = &cfg.system;
    let expected = match (p.expected_rate, lds_matrix(spec), p.hypothesis) {
        (Some(r), _, _) => r,
        (None, Some(a), _) => spectral_norm(a)?,
        (None, None, Some(h)) => h.gamma,
        (None, None, None) => {
            return Err(CliError::Config(
                "contraction on an slds needs expected_rate or hypothesis".into(),
            ))
        }
    };
    let origin = vec![0.0; spec.dim()];
    let reference = burn_in_sampler(spec, &origin, p.m, p.reference_burn_in, mix64(cfg.seed ^ REFERENCE_STREAM))?;
    let fit = match contraction_rate_fit(spec, &p.x0, p.n_max, &reference, None, &p.ground_metric, cfg.seed) {
        Ok(fit) => fit,
        Err(Error::NoSignal) => {
            return Ok(Outcome {
                pass: false,
                result: json!({"expected_rate": expected, "fit": null, "note": "no steps above the noise plateau"}),
                csv: String::new(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let pass = (fit.kappa_hat - expected).abs() <= p.tolerance;
    let mut csv = String::from("n,w1,used_in_fit\n");
    for s in &fit.steps {
        let _ = writeln!(csv, "{},{},{}", s.n, s.w1, s.used_in_fit);
    }
    Ok(Outcome {
        pass,
        result: json!({
            "expected_rate": expected,
            "tolerance": p.tolerance,
            "fit": fit,
        }),
        csv,
    })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p: SweepParams = cfg.params()?;
    let spec = &cfg.system;
    if p.grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    if let Some(v) = p.grid.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("non-finite grid value {v}")));
    }
    p.reward.validate(spec.dim())?;
    let l = p.reward.lipschitz();
    match p.variable {
        SweepVariable::AlphaHat => {
            let mut csv = String::from("alpha_hat,beta,C,eta,C_hat,moment_bound,L_TE\n");
            let mut rows = Vec::new();
            for &alpha in &p.grid {
                let chain = slds_chain(spec, p.hypothesis, Some(alpha))?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    alpha,
                    chain.exp_lyapunov.beta,
                    chain.exp_lyapunov.c,
                    chain.drift.eta,
                    chain.drift.c_hat,
                    chain.stationary_moment_bound,
                    chain.te_constant
                );
                rows.push(to_value(&chain));
            }
            Ok(Outcome {
                pass: true,
                result: json!({"variable": p.variable, "rows": rows}),
                csv,
            })
        }
        variable => sweep_bounds(cfg, &p, variable, l),
    }
}

fn sweep_bounds(cfg: &ExperimentConfig, p: &SweepParams, variable: SweepVariable, l: f64) -> Result<Outcome, CliError> {
    let spec = &cfg.system;
    let lds = lds_matrix(spec);
    // base certificate: Markov bound for an lds, i.i.d. bound otherwise
    let (c, lambda_hat) = match lds {
        Some(a) => {
            let (t1, k) = lds_certificate(a)?;
            (t1.c, k.lambda_hat)
        }
        None if variable == SweepVariable::LambdaHat => {
            return Err(CliError::Config("a lambda_hat sweep needs an lds".into()))
        }
        None => (slds_chain(spec, p.hypothesis, p.alpha_hat)?.te_constant, 0.0),
    };
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Config(format!("params.{name} is required")));
    let need_n = || p.n.ok_or_else(|| CliError::Config("params.N is required".into()));
    if p.empirical.is_some() && (lds.is_none() || variable == SweepVariable::LambdaHat) {
        return Err(CliError::Config("empirical sweeps are supported for N and epsilon on an lds".into()));
    }

    let mut csv = String::from("value,C,lambda_hat,N,epsilon,tensorized_constant,bound");
    if p.empirical.is_some() {
        csv.push_str(",empirical,ci_high,pass");
    }
    csv.push('\n');
    let mut rows = Vec::new();
    let mut pass = true;
    for (idx, &value) in p.grid.iter().enumerate() {
        let (n, eps, lam) = match variable {
            SweepVariable::N => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(CliError::Config(format!("N = {value} must be a positive integer")));
                }
                (value as usize, need(p.epsilon, "epsilon")?, lambda_hat)
            }
            SweepVariable::Epsilon => (need_n()?, value, lambda_hat),
            SweepVariable::LambdaHat => (need_n()?, need(p.epsilon, "epsilon")?, value),
            SweepVariable::AlphaHat => unreachable!(),
        };
        check_epsilons(&[eps])?;
        let cert = if lds.is_some() {
            ConcentrationCertificate::markov(
                concentrix::transport::T1Certificate::new(c, concentrix::transport::MetricTag::Euclidean)?,
                concentrix::transport::ContractionCertificate::new(lam)?,
                n,
                l,
                0.0,
            )?
        } else {
            ConcentrationCertificate::iid(c, n, l)?
        };
        let bound = cert.tail_bound(eps);
        let tensorized = cert.tensorized_constant();
        let _ = write!(csv, "{value},{c},{lam},{n},{eps},{tensorized},{bound}");
        let mut row = json!({
            "value": value,
            "certificate": cert,
            "epsilon": eps,
            "tensorized_constant": tensorized,
            "bound": bound,
        });
        if let Some(emp) = &p.empirical {
            let target = target_estimate(spec, &p.reward, emp.target_mean.clone(), 1e-2, &emp.x0, 0, 0, cfg.seed)?;
            let report = deviation_probability_experiment(
                spec,
                &DeviationConfig {
                    reward: p.reward.clone(),
                    x0: emp.x0.clone(),
                    n,
                    epsilons: vec![eps],
                    replications: emp.replications,
                    seed: derive_seed(cfg.seed, idx as u64),
                    target,
                    bias_samples: DeviationConfig::default_bias_samples(spec.dim()),
                },
            )?;
            let r = &report.rows[0];
            let _ = write!(csv, ",{},{},{}", r.empirical, r.ci_high, r.pass);
            pass &= r.pass;
            row["empirical"] = to_value(&report);
        }
        csv.push('\n');
        rows.push(row);
    }
    Ok(Outcome {
        pass,
        result: json!({"variable": variable, "rows": rows}),
        csv,
    })
}
