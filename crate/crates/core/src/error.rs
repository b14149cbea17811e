use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid region spec: {0}")]
    InvalidRegionSpec(String),

    #[error("invalid system spec: {0}")]
    InvalidSystem(String),

    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),

    #[error("system is not contractive: spectral norm {norm} >= 1")]
    NotContractive { norm: f64 },

    #[error("contraction constant {0} must lie in [0, 1)")]
    InvalidContraction(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gaussian exponential moment diverges for alpha = {alpha} (needs alpha < 1/2)")]
    DivergentMgf { alpha: f64 },

    #[error("alpha_hat = {alpha} outside admissible range (0, {upper})")]
    InvalidAlpha { alpha: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {n} (max {max})")]
    UnsupportedDimension { n: usize, max: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("sample sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("sample size {m} exceeds assignment limit {limit}; subsample first")]
    SizeLimit { m: usize, limit: usize },

    #[error("no signal: all distances are at the noise floor")]
    NoSignal,

    #[error("unknown reward tag `{0}`")]
    UnknownReward(String),

    #[error("target mean provenance missing")]
    MissingProvenance,

    #[error("requested precision {requested} unreachable within {budget} samples (achieved {achieved})")]
    PrecisionUnreachable {
        requested: f64,
        achieved: f64,
        budget: usize,
    },

    #[error("trajectory length {len} too short for {k_max} lags (need at least {needed})")]
    InsufficientLength {
        len: usize,
        k_max: usize,
        needed: usize,
    },
}
