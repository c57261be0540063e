//! Parameter space with per-parameter box bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered parameter names with per-parameter lower/upper bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParameterSpace {
    /// Builds a space, validating that all three vectors agree in length and
    /// that `lower[i] < upper[i]` holds for every parameter.
    pub fn new(
        names: Vec<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != lower.len() || names.len() != upper.len() {
            return Err(Error::InvalidSpace(format!(
                "names/lower/upper lengths differ: {}/{}/{}",
                names.len(),
                lower.len(),
                upper.len()
            )));
        }
        if names.is_empty() {
            return Err(Error::InvalidSpace("empty parameter space".into()));
        }
        for i in 0..names.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() || lower[i] >= upper[i] {
                return Err(Error::InvalidSpace(format!(
                    "parameter `{}`: lower {} must be < upper {}",
                    names[i], lower[i], upper[i]
                )));
            }
        }
        Ok(Self { names, lower, upper })
    }

    /// Shorthand for tests and fixtures: names `p0..pN` from bound pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let names = (0..bounds.len()).map(|i| format!("p{i}")).collect();
        let lower = bounds.iter().map(|b| b.0).collect();
        let upper = bounds.iter().map(|b| b.1).collect();
        Self::new(names, lower, upper)
    }

    /// Number of parameters.
    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Width `upper - lower` of parameter `i`.
    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// True when every component of `theta` lies inside the box.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.count()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Index of a parameter name, if present.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Returns a copy with the bounds of parameter `i` replaced.
    pub fn with_bounds(&self, i: usize, lower: f64, upper: f64) -> Result<Self> {
        let mut lo = self.lower.clone();
        let mut hi = self.upper.clone();
        lo[i] = lower;
        hi[i] = upper;
        Self::new(self.names.clone(), lo, hi)
    }
}

/// Projects every component of `theta` into its `[lower, upper]` interval.
///
/// Components already inside the box are returned unchanged, so the
/// projection is idempotent.
pub fn clamp_to_bounds(theta: &[f64], space: &ParameterSpace) -> Result<Vec<f64>> {
    if theta.len() != space.count() {
        return Err(Error::DimensionMismatch {
            expected: space.count(),
            actual: theta.len(),
        });
    }
    Ok(theta
        .iter()
        .zip(space.lower().iter().zip(space.upper()))
        .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
        .collect())
}
