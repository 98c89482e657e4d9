//! Convex feasible sets and Euclidean projection onto them.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};

/// Tolerance used when asserting membership after a projection.
pub const PROJECTION_TOL: f64 = 1e-12;

/// Closed convex region for actions or parameters.
///
/// Only axis-aligned boxes and Euclidean balls are supported; both have exact
/// closed-form projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetRepr", into = "SetRepr")]
pub enum FeasibleSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum SetRepr {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl TryFrom<SetRepr> for FeasibleSet {
    type Error = Error;

    fn try_from(repr: SetRepr) -> Result<Self> {
        match repr {
            SetRepr::Box { lower, upper } => FeasibleSet::new_box(lower, upper),
            SetRepr::Ball { center, radius } => FeasibleSet::new_ball(center, radius),
        }
    }
}

impl From<FeasibleSet> for SetRepr {
    fn from(set: FeasibleSet) -> Self {
        match set {
            FeasibleSet::Box { lower, upper } => SetRepr::Box { lower, upper },
            FeasibleSet::Ball { center, radius } => SetRepr::Ball { center, radius },
        }
    }
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidInput("box must have dimension >= 1".into()));
        }
        if lower.iter().chain(&upper).any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("box bounds must not be NaN".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidInput(format!(
                "box lower[{i}] = {} exceeds upper[{i}] = {}",
                lower[i], upper[i]
            )));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    /// The cube [lo, hi]^dim.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidInput("ball must have dimension >= 1".into()));
        }
        check_finite("ball center", &center, None)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn dimension(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
        }
    }

    /// Euclidean-nearest point of the set.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dimension(), point.len())?;
        Ok(match self {
            FeasibleSet::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&x, (&lo, &hi))| x.max(lo).min(hi))
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let dist = euclidean_distance(point, center);
                if dist <= *radius {
                    point.to_vec()
                } else {
                    let scale = radius / dist;
                    point
                        .iter()
                        .zip(center)
                        .map(|(&x, &c)| c + scale * (x - c))
                        .collect()
                }
            }
        })
    }

    /// True iff no constraint is violated by more than `tol`.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dimension(), point.len())?;
        Ok(match self {
            FeasibleSet::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&x, (&lo, &hi))| x >= lo - tol && x <= hi + tol),
            FeasibleSet::Ball { center, radius } => {
                euclidean_distance(point, center) <= radius + tol
            }
        })
    }
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    // hypot-style scaling keeps huge entries from overflowing
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    euclidean_norm(&diff)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
