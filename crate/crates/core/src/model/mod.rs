//! Forward-model contract, parameter space and built-in synthetic models.

pub mod creep;
pub mod data;
pub mod sloppy;
pub mod space;

pub use creep::CreepModel;
pub use data::{
    generate_synthetic, ExperimentSet, Loading, MeasurementSeries, SensorChannel, StressStep,
    TestDefinition,
};
pub use sloppy::SloppyModel;
pub use space::{clamp_to_bounds, ParameterSpace};

use crate::error::{Error, Result};

/// Deterministic mapping from a parameter vector to a predicted series.
///
/// `predict` must be pure: identical inputs yield identical outputs, and the
/// returned series has one entry per acquisition instant of the sensor.
pub trait ForwardModel: Send + Sync {
    /// Number of parameters the model expects.
    fn parameter_count(&self) -> usize;

    /// Predicted series `h(theta, t_i)` for one sensor of one test.
    fn predict(&self, theta: &[f64], test: &TestDefinition, sensor_id: &str) -> Result<Vec<f64>>;

    /// Closed-form `dh/dtheta`, one row per acquisition, one column per
    /// parameter. Models without analytic derivatives return `None`.
    fn analytic_jacobian(
        &self,
        _theta: &[f64],
        _test: &TestDefinition,
        _sensor_id: &str,
    ) -> Option<Result<Vec<Vec<f64>>>> {
        None
    }
}

fn check_len(theta: &[f64], expected: usize) -> Result<()> {
    if theta.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: theta.len() });
    }
    Ok(())
}

/// Built-in model registry keyed by string name.
pub mod registry {
    use super::*;

    /// Instantiates a built-in model: `"creep3"` or `"sloppy4"`.
    pub fn create(name: &str) -> Result<Box<dyn ForwardModel>> {
        match name {
            "creep3" => Ok(Box::new(CreepModel)),
            "sloppy4" => Ok(Box::new(SloppyModel)),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    /// Names accepted by [`create`].
    pub fn names() -> &'static [&'static str] {
        &["creep3", "sloppy4"]
    }
}

/// Wraps a model so that a subset of parameters is frozen at fixed values,
/// exposing only the remaining free parameters.
///
/// Used for staged identification: already-identified parameters are pinned
/// while the rest are searched over a reduced space.
pub struct FrozenModel {
    inner: Box<dyn ForwardModel>,
    /// Per full-model parameter: `Some(value)` if frozen, `None` if free.
    frozen: Vec<Option<f64>>,
    free_count: usize,
}

impl FrozenModel {
    /// Freezes `fixed` (full-space index, value) pairs of `inner`.
    pub fn new(inner: Box<dyn ForwardModel>, fixed: &[(usize, f64)]) -> Result<Self> {
        let alpha = inner.parameter_count();
        let mut frozen = vec![None; alpha];
        for &(i, v) in fixed {
            if i >= alpha {
                return Err(Error::InvalidConfig(format!(
                    "fixed parameter index {i} out of range for {alpha}-parameter model"
                )));
            }
            frozen[i] = Some(v);
        }
        let free_count = frozen.iter().filter(|f| f.is_none()).count();
        if free_count == 0 {
            return Err(Error::InvalidConfig(
                "all parameters frozen: nothing left to identify".into(),
            ));
        }
        Ok(Self { inner, frozen, free_count })
    }

    /// Splices free values into the full parameter vector.
    pub fn full_theta(&self, free: &[f64]) -> Result<Vec<f64>> {
        check_len(free, self.free_count)?;
        let mut theta = Vec::with_capacity(self.frozen.len());
        let mut it = free.iter();
        for f in &self.frozen {
            match f {
                Some(v) => theta.push(*v),
                None => theta.push(*it.next().expect("length checked")),
            }
        }
        Ok(theta)
    }

    /// Restriction of a full parameter space to the free parameters.
    pub fn free_space(&self, full: &ParameterSpace) -> Result<ParameterSpace> {
        if full.count() != self.frozen.len() {
            return Err(Error::DimensionMismatch {
                expected: self.frozen.len(),
                actual: full.count(),
            });
        }
        let mut names = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (i, f) in self.frozen.iter().enumerate() {
            if f.is_none() {
                names.push(full.names()[i].clone());
                lower.push(full.lower()[i]);
                upper.push(full.upper()[i]);
            }
        }
        ParameterSpace::new(names, lower, upper)
    }
}

impl ForwardModel for FrozenModel {
    fn parameter_count(&self) -> usize {
        self.free_count
    }

    fn predict(&self, theta: &[f64], test: &TestDefinition, sensor_id: &str) -> Result<Vec<f64>> {
        self.inner.predict(&self.full_theta(theta)?, test, sensor_id)
    }

    fn analytic_jacobian(
        &self,
        theta: &[f64],
        test: &TestDefinition,
        sensor_id: &str,
    ) -> Option<Result<Vec<Vec<f64>>>> {
        let full = match self.full_theta(theta) {
            Ok(f) => f,
            Err(e) => return Some(Err(e)),
        };
        let jac = self.inner.analytic_jacobian(&full, test, sensor_id)?;
        Some(jac.map(|rows| {
            rows.into_iter()
                .map(|row| {
                    row.into_iter()
                        .zip(&self.frozen)
                        .filter_map(|(d, f)| f.is_none().then_some(d))
                        .collect()
                })
                .collect()
        }))
    }
}
