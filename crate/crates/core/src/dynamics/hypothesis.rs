use serde::{Deserialize, Serialize};

use super::{Predicate, SystemKind, SystemSpec};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::rng;

const CONTAINMENT_SAMPLES: usize = 100_000;
const CONTAINMENT_INFLATION: f64 = 1e-6;
const CONTAINMENT_SEED: u64 = 0x5EED_C0DE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainmentMethod {
    /// Predicate carries `ball_le r` with `r <= ϱ`.
    Analytic,
    /// No point of a sphere of radius `ϱ(1+1e-6)` was classified into the
    /// region. Probabilistic; a region with no boundary crossing (entirely
    /// outside the ball, or non-convex) can be misclassified.
    Sampled,
    /// Predicate is unbounded by construction (catch-all or `ball_gt` only).
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum RegionVerdict {
    Contractive {
        norm: f64,
    },
    Bounded {
        norm: f64,
        containment: ContainmentMethod,
    },
    Violation {
        norm: f64,
        contained: bool,
        containment: ContainmentMethod,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub passed: bool,
    pub violating_region: Option<usize>,
    pub rho: f64,
    pub gamma: f64,
    pub lipschitz_bound: f64,
    pub regions: Vec<RegionVerdict>,
    /// True when any containment decision relied on sampling.
    pub probabilistic: bool,
}

/// Every region is either contractive (`‖A_j‖₂ <= γ < 1`) or contained in the
/// ball of radius `ϱ` with `‖A_j‖₂ <= L`.
pub fn check_slds_hypothesis(
    spec: &SystemSpec,
    rho: f64,
    gamma: f64,
    lipschitz_bound: f64,
) -> Result<HypothesisReport> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidHypothesis(format!(
            "gamma = {gamma} must lie in [0, 1)"
        )));
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::InvalidHypothesis(format!("rho = {rho} must be >= 0")));
    }
    if !(lipschitz_bound.is_finite() && lipschitz_bound >= 0.0) {
        return Err(Error::InvalidHypothesis(format!(
            "L = {lipschitz_bound} must be >= 0"
        )));
    }
    let spec = spec.as_slds();
    let SystemKind::Slds { regions, maps } = spec.kind() else {
        unreachable!("as_slds always yields a switched system");
    };

    let mut sphere_hits: Option<Vec<bool>> = None;
    let mut verdicts = Vec::with_capacity(maps.len());
    let mut probabilistic = false;
    for (j, (pred, a)) in regions.predicates().iter().zip(maps).enumerate() {
        let norm = spectral_norm(a)?;
        if norm <= gamma {
            verdicts.push(RegionVerdict::Contractive { norm });
            continue;
        }
        let (contained, method) = match analytic_containment(pred, rho) {
            Some(c) => c,
            None => {
                probabilistic = true;
                let hits = sphere_hits.get_or_insert_with(|| sample_sphere_hits(&spec, rho));
                (!hits[j], ContainmentMethod::Sampled)
            }
        };
        if contained && norm <= lipschitz_bound {
            verdicts.push(RegionVerdict::Bounded {
                norm,
                containment: method,
            });
        } else {
            verdicts.push(RegionVerdict::Violation {
                norm,
                contained,
                containment: method,
            });
        }
    }
    let violating_region = verdicts
        .iter()
        .position(|v| matches!(v, RegionVerdict::Violation { .. }));
    Ok(HypothesisReport {
        passed: violating_region.is_none(),
        violating_region,
        rho,
        gamma,
        lipschitz_bound,
        regions: verdicts,
        probabilistic,
    })
}

fn analytic_containment(pred: &Predicate, rho: f64) -> Option<(bool, ContainmentMethod)> {
    if pred.catch_all {
        return Some((false, ContainmentMethod::Unbounded));
    }
    if let Some(r) = pred.ball_le {
        if r <= rho {
            return Some((true, ContainmentMethod::Analytic));
        }
    }
    if pred.ball_le.is_none() && pred.halfspaces.is_none() {
        return Some((false, ContainmentMethod::Unbounded));
    }
    None
}

/// For each region, whether any sampled point just outside the ball lands in it.
fn sample_sphere_hits(spec: &SystemSpec, rho: f64) -> Vec<bool> {
    let n = spec.dim();
    let radius = rho * (1.0 + CONTAINMENT_INFLATION);
    let n_regions = spec.matrices().len();
    let mut hits = vec![false; n_regions];
    let mut stream = rng::stream(CONTAINMENT_SEED);
    let mut x = vec![0.0; n];
    for _ in 0..CONTAINMENT_SAMPLES {
        rng::fill_standard_normal(&mut stream, &mut x);
        let len = crate::linalg::norm(&x);
        if len == 0.0 {
            continue;
        }
        for v in x.iter_mut() {
            *v *= radius / len;
        }
        hits[spec.region_index(&x)] = true;
    }
    hits
}
