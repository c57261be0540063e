//! Four-parameter model with a switchable identifiability structure.
//!
//! The `"restricted"` variant responds as `h(t) = (a*b)*t + c`: only the
//! product `a*b` and the offset `c` are identifiable and `d` is absent, so
//! the objective has a ridge of equally good optima. The `"redundant"`
//! variant responds as `h(t) = a*t^2 + b*t + c + d*sin(t)`, which makes all
//! four parameters identifiable.

use crate::error::{Error, Result};
use crate::model::data::{Loading, TestDefinition};
use crate::model::{check_len, ForwardModel};

/// Registered as `"sloppy4"`; parameters `(a, b, c, d)`.
pub struct SloppyModel;

enum Variant {
    Restricted,
    Redundant,
}

impl SloppyModel {
    fn variant(test: &TestDefinition) -> Result<Variant> {
        match &test.loading {
            Loading::Variant { name } => match name.as_str() {
                "restricted" => Ok(Variant::Restricted),
                "redundant" => Ok(Variant::Redundant),
                other => Err(Error::InvalidConfig(format!(
                    "sloppy4 test `{}`: unknown variant `{other}` (expected `restricted` or `redundant`)",
                    test.test_id
                ))),
            },
            other => Err(Error::InvalidConfig(format!(
                "sloppy4 requires a variant loading, test `{}` has {:?}",
                test.test_id, other
            ))),
        }
    }
}

impl ForwardModel for SloppyModel {
    fn parameter_count(&self) -> usize {
        4
    }

    fn predict(&self, theta: &[f64], test: &TestDefinition, sensor_id: &str) -> Result<Vec<f64>> {
        check_len(theta, 4)?;
        let (a, b, c, d) = (theta[0], theta[1], theta[2], theta[3]);
        let variant = Self::variant(test)?;
        let times = test.times(sensor_id)?;
        Ok(times
            .iter()
            .map(|&t| match variant {
                Variant::Restricted => a * b * t + c,
                Variant::Redundant => a * t * t + b * t + c + d * t.sin(),
            })
            .collect())
    }

    fn analytic_jacobian(
        &self,
        theta: &[f64],
        test: &TestDefinition,
        sensor_id: &str,
    ) -> Option<Result<Vec<Vec<f64>>>> {
        Some((|| {
            check_len(theta, 4)?;
            let (a, b) = (theta[0], theta[1]);
            let variant = Self::variant(test)?;
            let times = test.times(sensor_id)?;
            Ok(times
                .iter()
                .map(|&t| match variant {
                    Variant::Restricted => vec![b * t, a * t, 1.0, 0.0],
                    Variant::Redundant => vec![t * t, t, 1.0, t.sin()],
                })
                .collect())
        })())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::data::SensorChannel;

    fn variant_test(name: &str, times: Vec<f64>) -> TestDefinition {
        TestDefinition::new(
            "v",
            vec![SensorChannel { sensor_id: "s".into(), times }],
            Loading::Variant { name: name.into() },
        )
        .unwrap()
    }

    #[test]
    fn restricted_response_at_unit_time() {
        let t = variant_test("restricted", vec![0.0, 1.0]);
        let h = SloppyModel.predict(&[2.0, 3.0, 1.0, 9.0], &t, "s").unwrap();
        assert_eq!(h[1], 7.0);
    }

    #[test]
    fn restricted_ridge_gives_identical_series() {
        // Equal products a*b and equal c: the responses match exactly and d
        // is irrelevant.
        let t = variant_test("restricted", vec![0.0, 0.3, 1.0, 2.7, 14.0]);
        let h1 = SloppyModel.predict(&[2.0, 3.0, 1.0, 9.0], &t, "s").unwrap();
        let h2 = SloppyModel.predict(&[6.0, 1.0, 1.0, 0.0], &t, "s").unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1[2], 7.0);
    }

    #[test]
    fn redundant_offset_survives_at_time_zero() {
        let t = variant_test("redundant", vec![0.0, 1.0]);
        let h = SloppyModel.predict(&[2.0, 3.0, 1.0, 9.0], &t, "s").unwrap();
        assert_eq!(h[0], 1.0);
    }

    #[test]
    fn unknown_variant_is_a_configuration_error() {
        let t = variant_test("mystery", vec![0.0, 1.0]);
        let err = SloppyModel.predict(&[1.0, 1.0, 1.0, 1.0], &t, "s").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn jacobian_marks_d_absent_in_restricted_variant() {
        let t = variant_test("restricted", vec![0.5, 2.0]);
        let jac = SloppyModel
            .analytic_jacobian(&[2.0, 3.0, 1.0, 9.0], &t, "s")
            .unwrap()
            .unwrap();
        for row in &jac {
            assert_eq!(row[3], 0.0);
        }
        assert_eq!(jac[1][0], 6.0); // d h / d a = b * t
    }
}
