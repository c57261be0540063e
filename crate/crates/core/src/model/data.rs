//! Test definitions, measurement series and experiment sets.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ForwardModel;

/// One piecewise-constant stress step: the stress level applied from
/// `start_time` onward, until the next step replaces it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressStep {
    pub start_time: f64,
    pub stress: f64,
}

/// Opaque loading description handed to the forward model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Loading {
    /// Piecewise-constant stress schedule, e.g. a creep plateau.
    StressSteps { steps: Vec<StressStep> },
    /// Named response variant for models with several functional forms.
    Variant { name: String },
    /// No loading information.
    None,
}

/// One sensor channel of a test: id plus its acquisition instants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorChannel {
    pub sensor_id: String,
    pub times: Vec<f64>,
}

/// A physical (or synthetic) test: sensor channels and a loading description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDefinition {
    pub test_id: String,
    pub channels: Vec<SensorChannel>,
    pub loading: Loading,
}

impl TestDefinition {
    /// Validates the channel layout: at least one sensor, at least two
    /// acquisitions per sensor, strictly increasing times.
    pub fn new(test_id: impl Into<String>, channels: Vec<SensorChannel>, loading: Loading) -> Result<Self> {
        let test_id = test_id.into();
        if channels.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "test `{test_id}` defines no sensors"
            )));
        }
        for ch in &channels {
            if ch.times.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "sensor `{}` of test `{test_id}` needs at least 2 acquisition instants",
                    ch.sensor_id
                )));
            }
            for i in 1..ch.times.len() {
                if ch.times[i] <= ch.times[i - 1] {
                    return Err(Error::NonMonotoneTimes {
                        sensor_id: ch.sensor_id.clone(),
                        index: i,
                    });
                }
            }
        }
        Ok(Self { test_id, channels, loading })
    }

    /// Acquisition instants of one sensor.
    pub fn times(&self, sensor_id: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.sensor_id == sensor_id)
            .map(|c| c.times.as_slice())
            .ok_or_else(|| Error::UnknownSensor {
                test_id: self.test_id.clone(),
                sensor_id: sensor_id.to_string(),
            })
    }
}

/// Measured values of one sensor, aligned with the sensor's times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub sensor_id: String,
    pub values: Vec<f64>,
}

impl MeasurementSeries {
    /// True when at least one measurement is nonzero.
    pub fn has_signal(&self) -> bool {
        self.values.iter().any(|&v| v != 0.0)
    }
}

/// Tests with their per-sensor measurement series.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSet {
    tests: Vec<TestDefinition>,
    series: BTreeMap<(String, String), MeasurementSeries>,
}

impl ExperimentSet {
    /// Assembles an experiment set, checking that every (test, sensor) pair
    /// has a series of matching length and that no series is all-zero.
    pub fn new(
        tests: Vec<TestDefinition>,
        series: Vec<(String, MeasurementSeries)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (test_id, s) in series {
            map.insert((test_id, s.sensor_id.clone()), s);
        }
        for test in &tests {
            for ch in &test.channels {
                let key = (test.test_id.clone(), ch.sensor_id.clone());
                let s = map.get(&key).ok_or_else(|| Error::MissingSeries {
                    test_id: test.test_id.clone(),
                    sensor_id: ch.sensor_id.clone(),
                })?;
                if s.values.len() != ch.times.len() {
                    return Err(Error::DimensionMismatch {
                        expected: ch.times.len(),
                        actual: s.values.len(),
                    });
                }
                if !s.has_signal() {
                    return Err(Error::DegenerateWeight {
                        sensor_id: ch.sensor_id.clone(),
                    });
                }
            }
        }
        Ok(Self { tests, series: map })
    }

    pub fn tests(&self) -> &[TestDefinition] {
        &self.tests
    }

    /// Series for a (test, sensor) pair.
    pub fn series(&self, test_id: &str, sensor_id: &str) -> Result<&MeasurementSeries> {
        self.series
            .get(&(test_id.to_string(), sensor_id.to_string()))
            .ok_or_else(|| Error::MissingSeries {
                test_id: test_id.to_string(),
                sensor_id: sensor_id.to_string(),
            })
    }

    /// Number of tests.
    pub fn test_count(&self) -> usize {
        self.tests.len()
    }

    /// Restricts the set to the named tests, preserving their order here.
    pub fn subset(&self, test_ids: &[String]) -> Result<ExperimentSet> {
        let mut tests = Vec::new();
        for id in test_ids {
            let t = self
                .tests
                .iter()
                .find(|t| &t.test_id == id)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown test `{id}` in subset")))?;
            tests.push(t.clone());
        }
        let series = tests
            .iter()
            .flat_map(|t| {
                t.channels.iter().map(|c| {
                    let s = self.series[&(t.test_id.clone(), c.sensor_id.clone())].clone();
                    (t.test_id.clone(), s)
                })
            })
            .collect();
        ExperimentSet::new(tests, series)
    }
}

/// Generates a synthetic experiment set from a model and a ground-truth
/// parameter vector: `m(t_i) = h(truth, t_i) + Gaussian(0, noise_std * max|h|)`
/// per sensor, with a seeded noise stream.
pub fn generate_synthetic(
    model: &dyn ForwardModel,
    truth: &[f64],
    tests: &[TestDefinition],
    noise_std: f64,
    seed: u64,
) -> Result<ExperimentSet> {
    if noise_std < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise_std must be >= 0, got {noise_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = Vec::new();
    for test in tests {
        for ch in &test.channels {
            let h = model.predict(truth, test, &ch.sensor_id)?;
            let scale = h.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            let values = if noise_std > 0.0 && scale > 0.0 {
                let normal = Normal::new(0.0, noise_std * scale)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                h.iter().map(|&v| v + normal.sample(&mut rng)).collect()
            } else {
                h
            };
            let s = MeasurementSeries { sensor_id: ch.sensor_id.clone(), values };
            if !s.has_signal() {
                return Err(Error::DegenerateWeight {
                    sensor_id: ch.sensor_id.clone(),
                });
            }
            series.push((test.test_id.clone(), s));
        }
    }
    ExperimentSet::new(tests.to_vec(), series)
}
