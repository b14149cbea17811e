//! Quadrature estimate of the minorization constant on the small set
//! `S = {‖x‖ <= R}`:
//!
//! ```text
//! β̂ = ∫_box min_{x ∈ S-grid} φ(y - A_{j(x)} x) dy
//! ```
//!
//! `φ` is decreasing in `‖·‖`, so the inner minimum is `φ` evaluated at the
//! farthest kernel mean from `y`, and the farthest point of a finite set is a
//! vertex of its convex hull. The `S`-grid is the lattice `x_step · ℤⁿ`
//! intersected with the ball, so grids for nested radii are nested and the
//! estimate is nonincreasing in `R`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::linalg::distance;

pub const MAX_MINORIZATION_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinorizationConfig {
    pub radius: f64,
    /// Integration box `[lo, hi]` on every axis.
    pub truncation: (f64, f64),
    pub y_step: f64,
    pub x_step: f64,
}

impl MinorizationConfig {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            truncation: (-5.0, 5.0),
            y_step: 0.01,
            x_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorizationEstimate {
    /// Lower estimate of β: truncation only removes mass, and the inner
    /// minimum is exact on the lattice (resolution error in x is not bounded).
    pub beta: f64,
    pub radius: f64,
    pub truncation: (f64, f64),
    pub y_step: f64,
    pub x_step: f64,
    pub x_points: usize,
}

pub fn minorization_beta(spec: &SystemSpec, config: &MinorizationConfig) -> Result<MinorizationEstimate> {
    let n = spec.dim();
    if n > MAX_MINORIZATION_DIM {
        return Err(Error::UnsupportedDimension {
            n,
            max: MAX_MINORIZATION_DIM,
        });
    }
    let MinorizationConfig {
        radius,
        truncation: (lo, hi),
        y_step,
        x_step,
    } = *config;
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be >= 0")));
    }
    if !(hi > lo) || !(y_step > 0.0) || !(x_step > 0.0) {
        return Err(Error::InvalidArgument("need hi > lo and positive steps".into()));
    }

    let lattice = small_set_lattice(n, radius, x_step);
    let images: Vec<Vec<f64>> = lattice
        .iter()
        .map(|x| {
            let mut m = vec![0.0; n];
            spec.drift_into(x, &mut m);
            m
        })
        .collect();
    let extremes = extreme_points(&images);

    let cells = ((hi - lo) / y_step).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let axis: Vec<f64> = (0..cells).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let norm_const = (2.0 * PI).powf(-0.5 * n as f64);
    let density_at = |y: &[f64]| {
        let d = extremes
            .iter()
            .map(|p| distance(y, p))
            .fold(0.0_f64, f64::max);
        norm_const * (-0.5 * d * d).exp()
    };
    let beta = match n {
        1 => axis.iter().map(|&y| density_at(&[y])).sum::<f64>() * h,
        _ => {
            let mut acc = 0.0;
            for &y0 in &axis {
                for &y1 in &axis {
                    acc += density_at(&[y0, y1]);
                }
            }
            acc * h * h
        }
    };
    Ok(MinorizationEstimate {
        beta: beta.clamp(0.0, 1.0),
        radius,
        truncation: (lo, hi),
        y_step: h,
        x_step,
        x_points: lattice.len(),
    })
}

fn small_set_lattice(n: usize, radius: f64, step: f64) -> Vec<Vec<f64>> {
    let k_max = (radius / step + 1e-9).floor() as i64;
    let r_sq = radius * radius * (1.0 + 1e-12);
    let ks = -k_max..=k_max;
    let mut out = Vec::new();
    match n {
        1 => {
            for k in ks {
                out.push(vec![k as f64 * step]);
            }
        }
        _ => {
            for a in ks.clone() {
                for b in ks.clone() {
                    let x = vec![a as f64 * step, b as f64 * step];
                    if x[0] * x[0] + x[1] * x[1] <= r_sq {
                        out.push(x);
                    }
                }
            }
        }
    }
    out
}

/// Points that can be farthest from some query: interval ends in 1D, convex
/// hull vertices in 2D.
fn extreme_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if points.is_empty() {
        return Vec::new();
    }
    if points[0].len() == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return vec![vec![lo], vec![hi]];
    }
    convex_hull(points)
}

/// Andrew's monotone chain.
fn convex_hull(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts.into_iter().map(|(a, b)| vec![a, b]).collect();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull.into_iter().map(|(a, b)| vec![a, b]).collect()
}
