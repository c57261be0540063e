//! Configuration parsing, dataset ingestion and serialization round-trips.

use std::fs;
use std::path::Path;

use identkit_cli::config::{RunConfiguration, TestSection, TimesSpec};
use identkit_cli::data::{load_dataset, write_dataset};
use identkit_cli::error::CliError;
use identkit_core::model::{generate_synthetic, registry, Loading};
use identkit_core::objective::Objective;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn test_sections() -> Vec<TestSection> {
    vec![
        TestSection {
            id: "t1".into(),
            sensors: vec!["s1".into(), "s2".into()],
            times: None,
            loading: Loading::None,
        },
        TestSection {
            id: "t2".into(),
            sensors: vec!["s1".into(), "s2".into()],
            times: None,
            loading: Loading::None,
        },
    ]
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).unwrap();
}

#[test]
fn loads_two_tests_with_two_sensors_each() {
    let dir = tempfile::tempdir().unwrap();
    for test in ["t1", "t2"] {
        for sensor in ["s1", "s2"] {
            write(
                &dir.path().join(format!("{test}_{sensor}.csv")),
                "time,value\n0.0,1.5\n1.0,2.5\n2.0,3.5\n",
            );
        }
    }
    write(
        &dir.path().join("manifest.csv"),
        "test_id,sensor_id,path\n\
         t1,s1,t1_s1.csv\nt1,s2,t1_s2.csv\nt2,s1,t2_s1.csv\nt2,s2,t2_s2.csv\n",
    );
    let set = load_dataset(&dir.path().join("manifest.csv"), &test_sections()).unwrap();
    assert_eq!(set.test_count(), 2);
    for test in ["t1", "t2"] {
        for sensor in ["s1", "s2"] {
            let series = set.series(test, sensor).unwrap();
            assert_eq!(series.values, vec![1.5, 2.5, 3.5]);
        }
    }
}

#[test]
fn decreasing_time_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.csv"), "time,value\n0.0,1.0\n2.0,2.0\n1.0,3.0\n");
    write(&dir.path().join("manifest.csv"), "test_id,sensor_id,path\nt1,s1,bad.csv\n");
    let tests = vec![TestSection {
        id: "t1".into(),
        sensors: vec!["s1".into()],
        times: None,
        loading: Loading::None,
    }];
    let err = load_dataset(&dir.path().join("manifest.csv"), &tests).unwrap_err();
    let message = err.to_string();
    assert!(matches!(err, CliError::Data(_)), "{message}");
    assert!(message.contains("bad.csv:4"), "line number missing: {message}");
    assert!(message.contains("non-monotone"), "{message}");
}

#[test]
fn missing_series_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("manifest.csv"), "test_id,sensor_id,path\nt1,s1,ghost.csv\n");
    let tests = vec![TestSection {
        id: "t1".into(),
        sensors: vec!["s1".into()],
        times: None,
        loading: Loading::None,
    }];
    let err = load_dataset(&dir.path().join("manifest.csv"), &tests).unwrap_err();
    assert!(err.to_string().contains("ghost.csv"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn all_zero_series_names_the_sensor() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("dead.csv"), "time,value\n0.0,0.0\n1.0,0.0\n");
    write(&dir.path().join("manifest.csv"), "test_id,sensor_id,path\nt1,dead_sensor,dead.csv\n");
    let tests = vec![TestSection {
        id: "t1".into(),
        sensors: vec!["dead_sensor".into()],
        times: None,
        loading: Loading::None,
    }];
    let err = load_dataset(&dir.path().join("manifest.csv"), &tests).unwrap_err();
    assert!(err.to_string().contains("dead_sensor"), "{err}");
}

#[test]
fn malformed_value_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.csv"), "time,value\n0.0,1.0\n1.0,not_a_number\n");
    write(&dir.path().join("manifest.csv"), "test_id,sensor_id,path\nt1,s1,bad.csv\n");
    let tests = vec![TestSection {
        id: "t1".into(),
        sensors: vec!["s1".into()],
        times: None,
        loading: Loading::None,
    }];
    let err = load_dataset(&dir.path().join("manifest.csv"), &tests).unwrap_err();
    assert!(err.to_string().contains(":3"), "{err}");
}

#[test]
fn synthetic_write_load_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let model = registry::create("creep3").unwrap();
    let truth = [1000.0, 2000.0, 5.0];
    let tests = [identkit_core::model::TestDefinition::new(
        "t1",
        vec![identkit_core::model::SensorChannel {
            sensor_id: "s1".into(),
            times: (0..12).map(|i| i as f64 * 0.37).collect(),
        }],
        Loading::StressSteps {
            steps: vec![identkit_core::model::StressStep { start_time: 0.0, stress: 10.0 }],
        },
    )
    .unwrap()];
    let set = generate_synthetic(model.as_ref(), &truth, &tests, 0.05, 7).unwrap();
    let manifest = write_dataset(&set, dir.path()).unwrap();

    let sections = vec![TestSection {
        id: "t1".into(),
        sensors: vec!["s1".into()],
        times: None,
        loading: tests[0].loading.clone(),
    }];
    let loaded = load_dataset(&manifest, &sections).unwrap();
    assert_eq!(loaded, set, "round trip must preserve every bit");
}

#[test]
fn noisy_truth_beats_a_perturbed_candidate() {
    let model = registry::create("creep3").unwrap();
    let truth = [1000.0, 2000.0, 5.0];
    let tests = [identkit_core::model::TestDefinition::new(
        "t1",
        vec![identkit_core::model::SensorChannel {
            sensor_id: "s1".into(),
            times: (0..20).map(|i| i as f64).collect(),
        }],
        Loading::StressSteps {
            steps: vec![identkit_core::model::StressStep { start_time: 0.0, stress: 10.0 }],
        },
    )
    .unwrap()];
    let set = generate_synthetic(model.as_ref(), &truth, &tests, 0.01, 3).unwrap();
    let objective = Objective::new(model.as_ref(), &set).unwrap();
    let at_truth = objective.cost(&truth).unwrap();
    let perturbed = objective.cost(&[1500.0, 3000.0, 7.5]).unwrap();
    assert!(at_truth > 0.0);
    assert!(at_truth < perturbed, "{at_truth} vs {perturbed}");
}

#[test]
fn bundled_fixture_resolves_with_documented_defaults() {
    let path = fixture("creep3.toml");
    let config = RunConfiguration::from_path(&path).unwrap();
    let out = tempfile::tempdir().unwrap();
    let run = config.resolve(path.parent().unwrap(), Some(out.path())).unwrap();
    assert_eq!(run.space.count(), 3);
    assert_eq!(run.ga.population_size, 30);
    assert_eq!(run.ga.generations, 30);
    assert!((run.ga.mutation_prob - 2.0 / 30.0).abs() < 1e-15);
    assert!((run.ga.crossover_prob - 0.8).abs() < 1e-15);
    assert_eq!(run.master_seed, 42);
    assert_eq!(run.dataset.test_count(), 1);
    // Noise-free synthetic data: the truth fits exactly.
    let objective = Objective::new(run.model.as_ref(), &run.dataset).unwrap();
    assert_eq!(objective.cost(&[1000.0, 2000.0, 5.0]).unwrap(), 0.0);
}

#[test]
fn stage_section_freezes_parameters_and_subsets_tests() {
    let dir = tempfile::tempdir().unwrap();
    let config_text = r#"
master_seed = 1
output_dir = "out"

[model]
name = "creep3"

[space]
names = ["E", "E_v", "tau"]
lower = [100.0, 500.0, 0.5]
upper = [5000.0, 10000.0, 20.0]

[[test]]
id = "a"
sensors = ["s"]
times = { start = 0.0, end = 10.0, count = 11 }
loading = { type = "stress_steps", steps = [{ start_time = 0.0, stress = 10.0 }] }

[[test]]
id = "b"
sensors = ["s"]
times = { start = 0.0, end = 20.0, count = 5 }
loading = { type = "stress_steps", steps = [{ start_time = 0.0, stress = 20.0 }] }

[data]
source = "synthetic"
truth = [1000.0, 2000.0, 5.0]

[stage]
fixed = { E = 1000.0 }
tests = ["b"]
"#;
    let path = dir.path().join("staged.toml");
    write(&path, config_text);
    let config = RunConfiguration::from_path(&path).unwrap();
    let run = config.resolve(dir.path(), None).unwrap();
    assert_eq!(run.space.names(), &["E_v".to_string(), "tau".to_string()]);
    assert_eq!(run.dataset.test_count(), 1);
    assert_eq!(run.dataset.tests()[0].test_id, "b");
    // Defaults follow the reduced dimension: population 10 * 2.
    assert_eq!(run.ga.population_size, 20);
    // The frozen model fits the data exactly at the remaining truth values.
    let objective = Objective::new(run.model.as_ref(), &run.dataset).unwrap();
    assert_eq!(objective.cost(&[2000.0, 5.0]).unwrap(), 0.0);
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = r#"
master_seed = 1
output_dir = "out"

[model]
name = "no_such_model"

[space]
names = ["x"]
lower = [0.0]
upper = [1.0]

[[test]]
id = "a"
sensors = ["s"]
times = { values = [0.0, 1.0] }
loading = { type = "none" }

[data]
source = "synthetic"
truth = [0.5]
"#;
    let path = dir.path().join("bad.toml");
    write(&path, bad);
    let config = RunConfiguration::from_path(&path).unwrap();
    let err = config.resolve(dir.path(), None).err().expect("unknown model must fail");
    assert_eq!(err.exit_code(), 1, "{err}");
}

#[test]
fn linspace_times_expand_inclusively() {
    let spec = TimesSpec::Linspace { start: 0.0, end: 30.0, count: 31 };
    let times = spec.expand().unwrap();
    assert_eq!(times.len(), 31);
    assert_eq!(times[0], 0.0);
    assert_eq!(times[30], 30.0);
    assert!((times[1] - 1.0).abs() < 1e-12);
}
