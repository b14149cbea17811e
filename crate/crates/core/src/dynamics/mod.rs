//! Linear and switched-linear random dynamical systems driven by standard
//! Gaussian noise: `x_{k+1} = A_{j(x_k)} x_k + ξ_k`, `ξ_k ~ N(0, Iₙ)`.

mod hypothesis;
mod region;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use hypothesis::{check_slds_hypothesis, ContainmentMethod, HypothesisReport, RegionVerdict};
pub use region::{Halfspace, Predicate, RegionSpec};

pub use crate::linalg::{spectral_norm, Matrix};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    Lds { a: Matrix },
    Slds { regions: RegionSpec, maps: Vec<Matrix> },
}

/// Closed-loop system description. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct SystemSpec {
    kind: SystemKind,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawSystem {
    Lds {
        #[serde(rename = "A")]
        a: Matrix,
    },
    Slds {
        regions: Vec<RawRegion>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    predicate: Predicate,
    #[serde(rename = "A")]
    a: Matrix,
}

impl TryFrom<RawSystem> for SystemSpec {
    type Error = Error;

    fn try_from(raw: RawSystem) -> Result<Self> {
        match raw {
            RawSystem::Lds { a } => SystemSpec::lds(a),
            RawSystem::Slds { regions } => {
                let (preds, maps) = regions.into_iter().map(|r| (r.predicate, r.a)).unzip();
                SystemSpec::slds(preds, maps)
            }
        }
    }
}

impl From<SystemSpec> for RawSystem {
    fn from(spec: SystemSpec) -> Self {
        match spec.kind {
            SystemKind::Lds { a } => RawSystem::Lds { a },
            SystemKind::Slds { regions, maps } => RawSystem::Slds {
                regions: regions
                    .predicates()
                    .iter()
                    .cloned()
                    .zip(maps)
                    .map(|(predicate, a)| RawRegion { predicate, a })
                    .collect(),
            },
        }
    }
}

impl SystemSpec {
    pub fn lds(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let dim = a.rows();
        Ok(Self {
            kind: SystemKind::Lds { a },
            dim,
        })
    }

    pub fn slds(predicates: Vec<Predicate>, maps: Vec<Matrix>) -> Result<Self> {
        let Some(first) = maps.first() else {
            return Err(Error::InvalidSystem("slds needs at least one region".into()));
        };
        let dim = first.rows();
        if predicates.len() != maps.len() {
            return Err(Error::InvalidSystem(format!(
                "{} predicates but {} matrices",
                predicates.len(),
                maps.len()
            )));
        }
        for m in &maps {
            if !m.is_square() {
                return Err(Error::NotSquare {
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            if m.rows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.rows(),
                });
            }
        }
        let regions = RegionSpec::new(predicates, dim)?;
        Ok(Self {
            kind: SystemKind::Slds { regions, maps },
            dim,
        })
    }

    /// The LDS `x ↦ Ax + ξ` viewed as a one-region switched system.
    pub fn as_slds(&self) -> SystemSpec {
        match &self.kind {
            SystemKind::Lds { a } => SystemSpec {
                kind: SystemKind::Slds {
                    regions: RegionSpec::new(vec![Predicate::catch_all()], self.dim)
                        .expect("single catch-all is valid"),
                    maps: vec![a.clone()],
                },
                dim: self.dim,
            },
            SystemKind::Slds { .. } => self.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn is_lds(&self) -> bool {
        matches!(self.kind, SystemKind::Lds { .. })
    }

    /// System matrices in region order (one entry for an LDS).
    pub fn matrices(&self) -> &[Matrix] {
        match &self.kind {
            SystemKind::Lds { a } => std::slice::from_ref(a),
            SystemKind::Slds { maps, .. } => maps,
        }
    }

    /// The matrix applied at `x`.
    pub fn matrix_at(&self, x: &[f64]) -> &Matrix {
        match &self.kind {
            SystemKind::Lds { a } => a,
            SystemKind::Slds { regions, maps } => &maps[regions.region_index(x)],
        }
    }

    pub fn region_index(&self, x: &[f64]) -> usize {
        match &self.kind {
            SystemKind::Lds { .. } => 0,
            SystemKind::Slds { regions, .. } => regions.region_index(x),
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("system spec serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean of the one-step kernel, `A_{j(x)} x`, written into `out`.
    pub(crate) fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix_at(x).mul_vec_into(x, out);
    }
}

pub fn region_index(regions: &RegionSpec, x: &[f64]) -> usize {
    regions.region_index(x)
}

/// One transition with an explicit noise vector.
pub fn step(spec: &SystemSpec, x: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    spec.check_dim(x)?;
    spec.check_dim(noise)?;
    let mut out = vec![0.0; spec.dim()];
    spec.drift_into(x, &mut out);
    for (o, e) in out.iter_mut().zip(noise) {
        *o += e;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub seed: u64,
    pub x0: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds x0")
    }

    /// `step,x_1,...,x_n` rows.
    pub fn to_csv(&self) -> String {
        let n = self.x0.len();
        let mut s = String::from("step");
        for i in 1..=n {
            let _ = write!(s, ",x_{i}");
        }
        s.push('\n');
        for (k, x) in self.states.iter().enumerate() {
            let _ = write!(s, "{k}");
            for v in x {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Runs `n_steps` transitions from `x0`. The output is a pure function of
/// `(spec, x0, n_steps, seed)`.
pub fn simulate(spec: &SystemSpec, x0: &[f64], n_steps: usize, seed: u64) -> Result<Trajectory> {
    spec.check_dim(x0)?;
    let mut stream = rng::stream(seed);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x0.to_vec());
    let mut noise = vec![0.0; spec.dim()];
    for k in 0..n_steps {
        rng::fill_standard_normal(&mut stream, &mut noise);
        let mut next = vec![0.0; spec.dim()];
        spec.drift_into(&states[k], &mut next);
        for (o, e) in next.iter_mut().zip(&noise) {
            *o += e;
        }
        states.push(next);
    }
    Ok(Trajectory {
        states,
        seed,
        x0: x0.to_vec(),
    })
}

/// Endpoint of a length-`n_steps` run without storing the path.
pub fn simulate_endpoint(
    spec: &SystemSpec,
    x0: &[f64],
    n_steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    spec.check_dim(x0)?;
    let mut stream = rng::stream(seed);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; spec.dim()];
    let mut noise = vec![0.0; spec.dim()];
    for _ in 0..n_steps {
        rng::fill_standard_normal(&mut stream, &mut noise);
        spec.drift_into(&x, &mut next);
        for ((xi, ni), ei) in x.iter_mut().zip(&next).zip(&noise) {
            *xi = ni + ei;
        }
    }
    Ok(x)
}
