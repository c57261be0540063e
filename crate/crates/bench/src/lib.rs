//! Shared fixtures for the criterion benches.

use identkit_core::model::{
    generate_synthetic, registry, ExperimentSet, ForwardModel, Loading, ParameterSpace,
    SensorChannel, StressStep, TestDefinition,
};

pub const CREEP_TRUTH: [f64; 3] = [1000.0, 2000.0, 5.0];

pub fn creep_model() -> Box<dyn ForwardModel> {
    registry::create("creep3").unwrap()
}

pub fn creep_space() -> ParameterSpace {
    ParameterSpace::new(
        vec!["E".into(), "E_v".into(), "tau".into()],
        vec![100.0, 500.0, 0.5],
        vec![5000.0, 10000.0, 20.0],
    )
    .unwrap()
}

pub fn creep_dataset(model: &dyn ForwardModel) -> ExperimentSet {
    let test = TestDefinition::new(
        "creep-10",
        vec![SensorChannel {
            sensor_id: "axial".into(),
            times: (0..31).map(|i| i as f64).collect(),
        }],
        Loading::StressSteps { steps: vec![StressStep { start_time: 0.0, stress: 10.0 }] },
    )
    .unwrap();
    generate_synthetic(model, &CREEP_TRUTH, &[test], 0.0, 0).unwrap()
}
