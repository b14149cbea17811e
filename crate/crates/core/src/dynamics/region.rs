//! Decision-list partitions of the state space for switched systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;

/// `normal · x <= offset`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn contains(&self, x: &[f64]) -> bool {
        let dot: f64 = self.normal.iter().zip(x).map(|(a, b)| a * b).sum();
        dot <= self.offset
    }
}

/// Conjunction of constraints. Balls are closed (`‖x‖ <= r`), their
/// complements open (`‖x‖ > r`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_le: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_gt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspaces: Option<Vec<Halfspace>>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub catch_all: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Predicate {
    pub fn catch_all() -> Self {
        Self {
            catch_all: true,
            ..Self::default()
        }
    }

    pub fn ball_le(r: f64) -> Self {
        Self {
            ball_le: Some(r),
            ..Self::default()
        }
    }

    pub fn ball_gt(r: f64) -> Self {
        Self {
            ball_gt: Some(r),
            ..Self::default()
        }
    }

    pub fn halfspaces(hs: Vec<Halfspace>) -> Self {
        Self {
            halfspaces: Some(hs),
            ..Self::default()
        }
    }

    fn has_constraints(&self) -> bool {
        self.ball_le.is_some() || self.ball_gt.is_some() || self.halfspaces.is_some()
    }

    pub fn matches(&self, x: &[f64]) -> bool {
        if self.catch_all {
            return true;
        }
        let r = norm(x);
        if let Some(le) = self.ball_le {
            if r > le {
                return false;
            }
        }
        if let Some(gt) = self.ball_gt {
            if r <= gt {
                return false;
            }
        }
        match &self.halfspaces {
            Some(hs) => hs.iter().all(|h| h.contains(x)),
            None => true,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.catch_all && self.has_constraints() {
            return Err(Error::InvalidRegionSpec(
                "catch_all cannot be combined with other constraints".into(),
            ));
        }
        if !self.catch_all && !self.has_constraints() {
            return Err(Error::InvalidRegionSpec(
                "predicate has no constraints; use {\"catch_all\": true}".into(),
            ));
        }
        for r in [self.ball_le, self.ball_gt].into_iter().flatten() {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidRegionSpec(format!("invalid ball radius {r}")));
            }
        }
        if let Some(hs) = &self.halfspaces {
            if hs.is_empty() {
                return Err(Error::InvalidRegionSpec("empty halfspace list".into()));
            }
            for h in hs {
                if h.normal.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: h.normal.len(),
                    });
                }
                if !h.offset.is_finite() || h.normal.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("halfspace"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered predicates with first-match semantics. The last entry is always a
/// catch-all, so every point of ℝⁿ falls into exactly one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    predicates: Vec<Predicate>,
    dim: usize,
}

impl RegionSpec {
    pub fn new(predicates: Vec<Predicate>, dim: usize) -> Result<Self> {
        let Some(last) = predicates.last() else {
            return Err(Error::InvalidRegionSpec("no regions".into()));
        };
        if !last.catch_all {
            return Err(Error::InvalidRegionSpec(
                "last predicate must be a catch-all".into(),
            ));
        }
        for (i, p) in predicates.iter().enumerate() {
            p.validate(dim)?;
            if p.catch_all && i + 1 != predicates.len() {
                return Err(Error::InvalidRegionSpec(format!(
                    "catch-all at position {i} shadows later regions"
                )));
            }
        }
        Ok(Self { predicates, dim })
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    /// Index of the first matching predicate.
    pub fn region_index(&self, x: &[f64]) -> usize {
        self.predicates
            .iter()
            .position(|p| p.matches(x))
            .unwrap_or(self.predicates.len() - 1)
    }
}
