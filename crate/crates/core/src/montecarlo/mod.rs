//! Empirical verification: sampling, Wasserstein estimates, deviation and
//! contraction experiments.
//!
//! Every parallel loop collects in index order and each replication draws
//! from its own derived stream, so results do not depend on the worker count.

mod assignment;
mod autocov;
mod contraction;
mod deviation;
mod sampling;
mod stationary;
mod stats;
mod wasserstein;

pub use assignment::{solve as solve_assignment, Assignment};
pub use autocov::{empirical_autocovariance, AutocovarianceReport, LagCovariance, AUTOCOV_CONFIDENCE};
pub use contraction::{contraction_rate_fit, ContractionFit, StepDistance, PLATEAU_FACTOR};
pub use deviation::{
    deviation_probability_experiment, iid_deviation_experiment, BiasEstimate, BurnInDiagnostic, DeviationConfig,
    DeviationReport, DeviationRow, ExperimentKind, IidDeviationConfig, MIN_REPLICATIONS, REPORT_CONFIDENCE,
};
pub use sampling::{burn_in_sampler, gaussian_batch, Provenance, SampleBatch};
pub use stationary::{
    lds_stationary_covariance, lyapunov_residual, stationary_mean_reward, MeanEstimate, MeanProvenance,
    StationarySource, MC_BUDGET, MEAN_CONFIDENCE,
};
pub use stats::{clopper_pearson, normal_critical, MeanSummary};
pub use wasserstein::{
    assignment_w1, empirical_w1, sorted_w1, GroundMetric, W1Solver, WassersteinEstimate, ASSIGNMENT_LIMIT,
};

/// Runs `f` on a dedicated pool of `workers` threads (0 means rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
