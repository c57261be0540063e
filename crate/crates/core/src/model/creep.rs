//! Three-parameter visco-elastic creep model under piecewise-constant stress.
//!
//! For a single stress plateau `sigma` applied from `t = 0`, the strain is
//!
//! ```text
//! eps(t) = sigma/E + (sigma/E_v) * (1 - exp(-t/tau))
//! ```
//!
//! Multi-plateau schedules superpose the responses of the individual stress
//! increments (linear hereditary superposition), which keeps a closed-form
//! Jacobian available.

use crate::error::{Error, Result};
use crate::model::data::{Loading, StressStep, TestDefinition};
use crate::model::{check_len, ForwardModel};

/// Registered as `"creep3"`; parameters `(E, E_v, tau)`.
pub struct CreepModel;

const PARAM_NAMES: [&str; 3] = ["E", "E_v", "tau"];

impl CreepModel {
    fn steps(test: &TestDefinition) -> Result<&[StressStep]> {
        match &test.loading {
            Loading::StressSteps { steps } => Ok(steps),
            other => Err(Error::InvalidConfig(format!(
                "creep3 requires a stress_steps loading, test `{}` has {:?}",
                test.test_id, other
            ))),
        }
    }

    fn validate(theta: &[f64]) -> Result<()> {
        check_len(theta, 3)?;
        for (name, &value) in PARAM_NAMES.iter().zip(theta) {
            if value.is_nan() || value <= 0.0 {
                return Err(Error::NonPositiveParameter { name: (*name).into(), value });
            }
        }
        Ok(())
    }
}

impl ForwardModel for CreepModel {
    fn parameter_count(&self) -> usize {
        3
    }

    fn predict(&self, theta: &[f64], test: &TestDefinition, sensor_id: &str) -> Result<Vec<f64>> {
        Self::validate(theta)?;
        let (elastic, viscous, tau) = (theta[0], theta[1], theta[2]);
        let steps = Self::steps(test)?;
        let times = test.times(sensor_id)?;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let mut eps = 0.0;
            let mut prev_stress = 0.0;
            for step in steps {
                if step.start_time > t {
                    break;
                }
                let increment = step.stress - prev_stress;
                let elapsed = t - step.start_time;
                eps += increment
                    * (1.0 / elastic + (1.0 - (-elapsed / tau).exp()) / viscous);
                prev_stress = step.stress;
            }
            out.push(eps);
        }
        Ok(out)
    }

    fn analytic_jacobian(
        &self,
        theta: &[f64],
        test: &TestDefinition,
        sensor_id: &str,
    ) -> Option<Result<Vec<Vec<f64>>>> {
        Some(self.jacobian_impl(theta, test, sensor_id))
    }
}

impl CreepModel {
    fn jacobian_impl(
        &self,
        theta: &[f64],
        test: &TestDefinition,
        sensor_id: &str,
    ) -> Result<Vec<Vec<f64>>> {
        Self::validate(theta)?;
        let (elastic, viscous, tau) = (theta[0], theta[1], theta[2]);
        let steps = Self::steps(test)?;
        let times = test.times(sensor_id)?;
        let mut rows = Vec::with_capacity(times.len());
        for &t in times {
            let mut d_elastic = 0.0;
            let mut d_viscous = 0.0;
            let mut d_tau = 0.0;
            let mut prev_stress = 0.0;
            for step in steps {
                if step.start_time > t {
                    break;
                }
                let increment = step.stress - prev_stress;
                let elapsed = t - step.start_time;
                let decay = (-elapsed / tau).exp();
                d_elastic += -increment / (elastic * elastic);
                d_viscous += -increment * (1.0 - decay) / (viscous * viscous);
                d_tau += -increment / viscous * decay * elapsed / (tau * tau);
                prev_stress = step.stress;
            }
            rows.push(vec![d_elastic, d_viscous, d_tau]);
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::model::data::SensorChannel;

    fn plateau(sigma: f64, times: Vec<f64>) -> TestDefinition {
        TestDefinition::new(
            "c",
            vec![SensorChannel { sensor_id: "s".into(), times }],
            Loading::StressSteps { steps: vec![StressStep { start_time: 0.0, stress: sigma }] },
        )
        .unwrap()
    }

    #[test]
    fn instantaneous_response_is_elastic_only() {
        let t = plateau(10.0, vec![0.0, 1.0]);
        let eps = CreepModel.predict(&[1000.0, 2000.0, 5.0], &t, "s").unwrap();
        assert_eq!(eps[0], 0.01);
    }

    #[test]
    fn long_time_asymptote() {
        let t = plateau(10.0, vec![0.0, 1.0e6]);
        let eps = CreepModel.predict(&[1000.0, 2000.0, 5.0], &t, "s").unwrap();
        assert_relative_eq!(eps[1], 0.015, max_relative = 1e-12);
    }

    #[test]
    fn one_relaxation_time_matches_closed_form() {
        // eps(5) = 0.01 + 0.005 * (1 - exp(-1)), frozen from a 50-digit
        // decimal evaluation of the closed form.
        let t = plateau(10.0, vec![0.0, 5.0]);
        let eps = CreepModel.predict(&[1000.0, 2000.0, 5.0], &t, "s").unwrap();
        assert_relative_eq!(eps[1], 0.013160602794142788, max_relative = 1e-15);
    }

    #[test]
    fn multi_plateau_superposes_stress_increments() {
        let t = TestDefinition::new(
            "c",
            vec![SensorChannel { sensor_id: "s".into(), times: vec![0.0, 1.0, 3.0, 8.0] }],
            Loading::StressSteps {
                steps: vec![
                    StressStep { start_time: 0.0, stress: 10.0 },
                    StressStep { start_time: 2.0, stress: 25.0 },
                ],
            },
        )
        .unwrap();
        let theta = [1000.0, 2000.0, 5.0];
        let eps = CreepModel.predict(&theta, &t, "s").unwrap();
        let unit = |sigma: f64, elapsed: f64| {
            sigma / theta[0] + sigma / theta[1] * (1.0 - (-elapsed / theta[2]).exp())
        };
        // Before the second step only the first plateau acts.
        assert_relative_eq!(eps[1], unit(10.0, 1.0), max_relative = 1e-15);
        // Afterwards the 15-unit increment adds its own transient.
        assert_relative_eq!(eps[2], unit(10.0, 3.0) + unit(15.0, 1.0), max_relative = 1e-14);
        assert_relative_eq!(eps[3], unit(10.0, 8.0) + unit(15.0, 6.0), max_relative = 1e-14);
    }

    #[test]
    fn rejects_non_positive_parameters() {
        let t = plateau(10.0, vec![0.0, 1.0]);
        for bad in [[0.0, 2000.0, 5.0], [1000.0, -1.0, 5.0], [1000.0, 2000.0, 0.0]] {
            let err = CreepModel.predict(&bad, &t, "s").unwrap_err();
            assert!(matches!(err, Error::NonPositiveParameter { .. }), "{bad:?}");
        }
    }

    #[test]
    fn rejects_unknown_sensor() {
        let t = plateau(10.0, vec![0.0, 1.0]);
        let err = CreepModel.predict(&[1000.0, 2000.0, 5.0], &t, "ghost").unwrap_err();
        assert!(matches!(err, Error::UnknownSensor { .. }));
    }

    #[test]
    fn predict_is_deterministic() {
        let t = plateau(17.0, vec![0.0, 0.5, 2.5, 9.0]);
        let a = CreepModel.predict(&[800.0, 1500.0, 3.0], &t, "s").unwrap();
        let b = CreepModel.predict(&[800.0, 1500.0, 3.0], &t, "s").unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn strain_is_nondecreasing_under_constant_stress(
            elastic in 10.0..1e5f64,
            viscous in 10.0..1e5f64,
            tau in 0.1..50.0f64,
            sigma in 0.1..100.0f64,
        ) {
            let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.7).collect();
            let t = plateau(sigma, times);
            let eps = CreepModel.predict(&[elastic, viscous, tau], &t, "s").unwrap();
            for w in eps.windows(2) {
                prop_assert!(w[1] >= w[0], "strain decreased: {} -> {}", w[0], w[1]);
            }
        }
    }
}
