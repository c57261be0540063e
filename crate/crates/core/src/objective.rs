//! Weighted least-squares cost over multiple tests and sensors, plus the
//! genetic algorithm's adaptive (fitness) function.
//!
//! Each sensor's residuals are made dimensionless by the square of its
//! largest absolute measurement. Multiple sensors and tests are combined by
//! nested averaging: the mean over tests of the mean over sensors of the
//! per-sensor cost, which reduces to the single flat normalization when all
//! counts are uniform.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{ExperimentSet, ForwardModel, MeasurementSeries};

/// Guard added to the objective before inversion so a perfect fit still has
/// a finite fitness.
pub const FITNESS_EPS: f64 = 1e-12;

/// Dimensionless weighting of one sensor: `chi = [max_i |m(t_i)|]^2`,
/// `weight = 1/chi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorWeight {
    pub chi: f64,
    pub weight: f64,
}

/// Signed difference `m - h` between a measurement and a prediction.
#[inline]
pub fn residual(measured: f64, predicted: f64) -> f64 {
    measured - predicted
}

/// Weighting coefficient of a sensor, from its measured series only.
pub fn sensor_weight(series: &MeasurementSeries) -> Result<SensorWeight> {
    let max_abs = series.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::DegenerateWeight { sensor_id: series.sensor_id.clone() });
    }
    let chi = max_abs * max_abs;
    Ok(SensorWeight { chi, weight: 1.0 / chi })
}

/// Single-test, single-sensor cost:
/// `f = 1/(2N) * 1/chi * sum_i (m(t_i) - h(theta, t_i))^2`.
pub fn cost_single(
    theta: &[f64],
    model: &dyn ForwardModel,
    test: &crate::model::TestDefinition,
    sensor_id: &str,
    series: &MeasurementSeries,
) -> Result<f64> {
    let predicted = model.predict(theta, test, sensor_id)?;
    if predicted.len() != series.values.len() {
        return Err(Error::DimensionMismatch {
            expected: series.values.len(),
            actual: predicted.len(),
        });
    }
    let w = sensor_weight(series)?;
    let n = series.values.len() as f64;
    let sum_sq: f64 = series
        .values
        .iter()
        .zip(&predicted)
        .map(|(&m, &h)| {
            let r = residual(m, h);
            r * r
        })
        .sum();
    Ok(sum_sq * w.weight / (2.0 * n))
}

/// Cost of one parameter vector with per-test and per-sensor parts and the
/// flattened weighted residual vector.
///
/// `total` is the mean over tests of the mean over sensors of the per-sensor
/// cost, and equals the sum of squared `residual_vector` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub total: f64,
    pub per_test: BTreeMap<String, f64>,
    pub per_sensor: BTreeMap<(String, String), f64>,
    pub residual_vector: Vec<f64>,
}

/// The GA's adaptive function: the guarded inverse `1/(f + 1e-12)` of the
/// objective, strictly decreasing in `f`.
#[inline]
pub fn adaptive_fitness(cost: f64) -> f64 {
    1.0 / (cost + FITNESS_EPS)
}

/// Objective function over a full experiment set, with sensor weights frozen
/// from the measured data at construction.
pub struct Objective<'a> {
    model: &'a dyn ForwardModel,
    dataset: &'a ExperimentSet,
    weights: BTreeMap<(String, String), SensorWeight>,
}

impl<'a> Objective<'a> {
    pub fn new(model: &'a dyn ForwardModel, dataset: &'a ExperimentSet) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for test in dataset.tests() {
            for ch in &test.channels {
                let series = dataset.series(&test.test_id, &ch.sensor_id)?;
                weights.insert(
                    (test.test_id.clone(), ch.sensor_id.clone()),
                    sensor_weight(series)?,
                );
            }
        }
        Ok(Self { model, dataset, weights })
    }

    pub fn dataset(&self) -> &ExperimentSet {
        self.dataset
    }

    pub fn model(&self) -> &dyn ForwardModel {
        self.model
    }

    /// Frozen weighting coefficient of one sensor.
    pub fn sensor_weight_of(&self, test_id: &str, sensor_id: &str) -> Result<SensorWeight> {
        self.weights
            .get(&(test_id.to_string(), sensor_id.to_string()))
            .copied()
            .ok_or_else(|| Error::MissingSeries {
                test_id: test_id.to_string(),
                sensor_id: sensor_id.to_string(),
            })
    }

    /// Full cost breakdown at `theta`.
    pub fn breakdown(&self, theta: &[f64]) -> Result<CostBreakdown> {
        let n_test = self.dataset.test_count();
        if n_test == 0 {
            return Err(Error::InvalidConfig("empty experiment set".into()));
        }
        let mut per_test = BTreeMap::new();
        let mut per_sensor = BTreeMap::new();
        let mut residual_vector = Vec::new();
        let mut total = 0.0;
        for test in self.dataset.tests() {
            let n_sensors = test.channels.len() as f64;
            let mut test_cost = 0.0;
            for ch in &test.channels {
                let series = self.dataset.series(&test.test_id, &ch.sensor_id)?;
                let predicted = self.model.predict(theta, test, &ch.sensor_id)?;
                if predicted.len() != series.values.len() {
                    return Err(Error::DimensionMismatch {
                        expected: series.values.len(),
                        actual: predicted.len(),
                    });
                }
                let w = self.weights[&(test.test_id.clone(), ch.sensor_id.clone())];
                let n_acq = series.values.len() as f64;
                // Each entry carries its share of every normalization level,
                // so that total = sum of squared entries.
                let entry_scale =
                    (w.weight / (2.0 * n_acq * n_sensors * n_test as f64)).sqrt();
                let mut sum_sq = 0.0;
                for (&m, &h) in series.values.iter().zip(&predicted) {
                    let r = residual(m, h);
                    sum_sq += r * r;
                    residual_vector.push(entry_scale * r);
                }
                let sensor_cost = sum_sq * w.weight / (2.0 * n_acq);
                per_sensor.insert((test.test_id.clone(), ch.sensor_id.clone()), sensor_cost);
                test_cost += sensor_cost;
            }
            test_cost /= n_sensors;
            per_test.insert(test.test_id.clone(), test_cost);
            total += test_cost;
        }
        total /= n_test as f64;
        Ok(CostBreakdown { total, per_test, per_sensor, residual_vector })
    }

    /// Total cost at `theta`.
    pub fn cost(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.breakdown(theta)?.total)
    }

    /// Total cost, mapping evaluation failures to `+inf` so population-based
    /// search can keep going on wide domains.
    pub fn cost_or_inf(&self, theta: &[f64]) -> f64 {
        self.cost(theta).unwrap_or(f64::INFINITY)
    }

    /// Flattened weighted residual vector at `theta` (for the refiner).
    pub fn residuals(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.breakdown(theta)?.residual_vector)
    }
}
