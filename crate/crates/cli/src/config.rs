use std::path::Path;

use concentrix::dynamics::SystemSpec;
use concentrix::montecarlo::GroundMetric;
use concentrix::Reward;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Certify,
    VerifyDeviation,
    VerifyLyapunov,
    Contraction,
    Sweep,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Certify => "certify",
            Pipeline::VerifyDeviation => "verify-deviation",
            Pipeline::VerifyLyapunov => "verify-lyapunov",
            Pipeline::Contraction => "contraction",
            Pipeline::Sweep => "sweep",
        }
    }
}

/// System given inline or as a path relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemRef {
    Path(String),
    Inline(Value),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub system: SystemRef,
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: Value,
}

/// A validated config with the system resolved inline and the seed fixed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub params: Value,
    /// Self-contained form embedded in reports.
    pub canonical: Value,
    pub hash: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        // a report is accepted in place of its embedded config
        let value = match value.get("config") {
            Some(inner) if value.get("config_hash").is_some() => inner.clone(),
            _ => value,
        };
        Self::from_value(value, path.parent(), seed_override)
    }

    pub fn from_value(value: Value, base: Option<&Path>, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        let seed = match (seed_override, raw.seed) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => return Err(CliError::Config("seed is mandatory".into())),
        };
        let system_value = match raw.system {
            SystemRef::Inline(v) => v,
            SystemRef::Path(p) => {
                let full = base.map_or_else(|| Path::new(&p).to_path_buf(), |b| b.join(&p));
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Config(format!("cannot read system {}: {e}", full.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid system JSON: {e}")))?
            }
        };
        let system: SystemSpec = serde_json::from_value(system_value)
            .map_err(|e| CliError::Config(format!("invalid system: {e}")))?;
        let params = if raw.params.is_null() {
            Value::Object(Default::default())
        } else {
            raw.params
        };
        let canonical = serde_json::to_value(RawConfig {
            system: SystemRef::Inline(serde_json::to_value(&system).expect("system serializes")),
            pipeline: raw.pipeline,
            seed: Some(seed),
            params: params.clone(),
        })
        .expect("config serializes");
        let hash = hex::encode(Sha256::digest(canonical.to_string().as_bytes()));
        Ok(Self {
            system,
            pipeline: raw.pipeline,
            seed,
            params,
            canonical,
            hash,
        })
    }

    pub fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone())
            .map_err(|e| CliError::Config(format!("{} params: {e}", self.pipeline.name())))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisParams {
    pub rho: f64,
    pub gamma: f64,
    #[serde(rename = "L")]
    pub lipschitz_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetMean {
    pub value: f64,
    pub note: String,
}

fn default_reward() -> Reward {
    Reward::Norm
}

fn default_epsilons() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyParams {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_reward")]
    pub reward: Reward,
    pub hypothesis: Option<HypothesisParams>,
    pub alpha_hat: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationExperiment {
    #[default]
    SingleTrajectory,
    IidBurnIn,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationParams {
    #[serde(default)]
    pub experiment: DeviationExperiment,
    #[serde(default = "default_reward")]
    pub reward: Reward,
    pub x0: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub replications: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    pub target_mean: Option<TargetMean>,
    /// Required 99% half-width when the target mean is estimated.
    #[serde(default = "default_precision")]
    pub precision: f64,
    pub bias_samples: Option<usize>,
    /// Burn-in horizon `T` for the i.i.d. experiment.
    pub burn_in: Option<usize>,
    pub te_constant: Option<f64>,
    pub hypothesis: Option<HypothesisParams>,
    pub alpha_hat: Option<f64>,
    #[serde(default = "default_diagnostic_samples")]
    pub diagnostic_samples: usize,
    /// Burn-in endpoints used to estimate the stationary mean of an SLDS.
    #[serde(default = "default_target_samples")]
    pub target_samples: usize,
}

fn default_precision() -> f64 {
    1e-2
}

fn default_diagnostic_samples() -> usize {
    256
}

fn default_target_samples() -> usize {
    200_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub radius: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentParams {
    #[serde(rename = "M")]
    pub samples: usize,
    #[serde(rename = "T")]
    pub burn_in: usize,
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalDriftParams {
    pub grid: GridParams,
    pub samples_per_point: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovParams {
    pub hypothesis: HypothesisParams,
    pub alpha_hat: f64,
    pub grid: GridParams,
    pub moment: Option<MomentParams>,
    pub empirical_drift: Option<EmpiricalDriftParams>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionParams {
    pub x0: Vec<f64>,
    pub n_max: usize,
    pub m: usize,
    /// Burn-in horizon of the reference batch.
    pub reference_burn_in: usize,
    #[serde(default = "default_metric")]
    pub ground_metric: GroundMetric,
    /// Defaults to `‖A‖₂` for an LDS and `γ` for an SLDS.
    pub expected_rate: Option<f64>,
    pub hypothesis: Option<HypothesisParams>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_metric() -> GroundMetric {
    GroundMetric::Euclidean
}

fn default_tolerance() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "lambda_hat")]
    LambdaHat,
    #[serde(rename = "alpha_hat")]
    AlphaHat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEmpirical {
    pub x0: Vec<f64>,
    #[serde(rename = "M")]
    pub replications: usize,
    pub target_mean: Option<TargetMean>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    #[serde(default = "default_reward")]
    pub reward: Reward,
    pub hypothesis: Option<HypothesisParams>,
    pub alpha_hat: Option<f64>,
    pub empirical: Option<SweepEmpirical>,
}
