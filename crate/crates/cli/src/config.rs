//! Run configuration: TOML schema and resolution into core types.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use identkit_core::ga::{GaConfig, MutationOp};
use identkit_core::lm::LmConfig;
use identkit_core::model::{
    registry, ExperimentSet, ForwardModel, FrozenModel, Loading, ParameterSpace, SensorChannel,
    TestDefinition,
};
use identkit_core::seed::derive_seed;
use identkit_core::strategy::{ScanConfig, StrategyConfig};

use crate::data::load_dataset;
use crate::error::{CliError, Result};

/// Acquisition instants: either an explicit list or a uniform grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TimesSpec {
    Explicit { values: Vec<f64> },
    Linspace { start: f64, end: f64, count: usize },
}

impl TimesSpec {
    pub fn expand(&self) -> Result<Vec<f64>> {
        match self {
            TimesSpec::Explicit { values } => Ok(values.clone()),
            TimesSpec::Linspace { start, end, count } => {
                if *count < 2 || end <= start {
                    return Err(CliError::Config(format!(
                        "linspace needs count >= 2 and end > start, got start={start} end={end} count={count}"
                    )));
                }
                let step = (end - start) / (*count as f64 - 1.0);
                Ok((0..*count).map(|i| start + step * i as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelSection {
    pub name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SpaceSection {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TestSection {
    pub id: String,
    pub sensors: Vec<String>,
    /// Required for synthetic data; ignored when series files supply times.
    pub times: Option<TimesSpec>,
    pub loading: Loading,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSection {
    /// Measured series from CSV files listed in a manifest.
    Files { manifest: PathBuf },
    /// Synthetic series generated from a ground-truth parameter vector.
    Synthetic {
        truth: Vec<f64>,
        #[serde(default)]
        noise_std: f64,
        /// Noise seed; derived from the master seed when absent.
        seed: Option<u64>,
    },
}

/// GA settings with resolution-dependent defaults left optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct GaSection {
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub crossover_prob: Option<f64>,
    pub mutation_prob: Option<f64>,
    pub mutation_op: Option<MutationOp>,
    pub elitism: Option<bool>,
}

/// Staged identification: freeze already-identified parameters and restrict
/// the dataset to a subset of tests.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct StageSection {
    pub fixed: BTreeMap<String, f64>,
    pub tests: Option<Vec<String>>,
}

/// The full configuration file.
#[derive(Debug, Clone, Deserialize)]
pub struct RunConfiguration {
    /// Mandatory: every stochastic component derives from this seed, so runs
    /// are reproducible by construction (no wall-clock seeding).
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub model: ModelSection,
    pub space: SpaceSection,
    #[serde(rename = "test")]
    pub tests: Vec<TestSection>,
    pub data: DataSection,
    #[serde(default)]
    pub ga: GaSection,
    #[serde(default)]
    pub lm: LmConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub stage: Option<StageSection>,
}

impl RunConfiguration {
    /// Parses a TOML configuration file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Configuration resolved into core types, with staged identification and
/// dataset loading or generation already applied.
pub struct ResolvedRun {
    pub model: Box<dyn ForwardModel>,
    pub space: ParameterSpace,
    pub dataset: ExperimentSet,
    pub ga: GaConfig,
    pub lm: LmConfig,
    pub scan: ScanConfig,
    pub strategy: StrategyConfig,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

/// Builds the test definitions declared in the configuration (synthetic
/// route: times must come from the config).
pub fn config_tests(config: &RunConfiguration) -> Result<Vec<TestDefinition>> {
    config
        .tests
        .iter()
        .map(|t| {
            let times = t
                .times
                .as_ref()
                .ok_or_else(|| {
                    CliError::Config(format!("test `{}` needs a times spec", t.id))
                })?
                .expand()?;
            let channels = t
                .sensors
                .iter()
                .map(|s| SensorChannel { sensor_id: s.clone(), times: times.clone() })
                .collect();
            TestDefinition::new(t.id.clone(), channels, t.loading.clone())
                .map_err(CliError::from)
        })
        .collect()
}

impl RunConfiguration {
    /// Resolves the configuration against a config-file directory (relative
    /// data paths are taken from there) and an optional output override.
    pub fn resolve(&self, base_dir: &Path, out_override: Option<&Path>) -> Result<ResolvedRun> {
        let full_space = ParameterSpace::new(
            self.space.names.clone(),
            self.space.lower.clone(),
            self.space.upper.clone(),
        )?;
        let full_model = registry::create(&self.model.name)?;
        if full_model.parameter_count() != full_space.count() {
            return Err(CliError::Config(format!(
                "model `{}` has {} parameters but the space defines {}",
                self.model.name,
                full_model.parameter_count(),
                full_space.count()
            )));
        }

        let dataset_full = match &self.data {
            DataSection::Files { manifest } => {
                let path = if manifest.is_absolute() {
                    manifest.clone()
                } else {
                    base_dir.join(manifest)
                };
                load_dataset(&path, &self.tests)?
            }
            DataSection::Synthetic { truth, noise_std, seed } => {
                if truth.len() != full_space.count() {
                    return Err(CliError::Config(format!(
                        "synthetic truth has {} entries, space needs {}",
                        truth.len(),
                        full_space.count()
                    )));
                }
                let tests = config_tests(self)?;
                let noise_seed = seed.unwrap_or_else(|| derive_seed(self.master_seed, u64::MAX));
                identkit_core::model::generate_synthetic(
                    full_model.as_ref(),
                    truth,
                    &tests,
                    *noise_std,
                    noise_seed,
                )?
            }
        };

        // Staged identification: subset of tests, frozen parameters.
        let (model, space, dataset): (Box<dyn ForwardModel>, ParameterSpace, ExperimentSet) =
            match &self.stage {
                Some(stage) => {
                    let dataset = match &stage.tests {
                        Some(ids) => dataset_full.subset(ids)?,
                        None => dataset_full,
                    };
                    if stage.fixed.is_empty() {
                        (full_model, full_space, dataset)
                    } else {
                        let fixed: Vec<(usize, f64)> = stage
                            .fixed
                            .iter()
                            .map(|(name, &value)| {
                                full_space.index_of(name).map(|i| (i, value)).ok_or_else(
                                    || {
                                        CliError::Config(format!(
                                            "fixed parameter `{name}` not in the space"
                                        ))
                                    },
                                )
                            })
                            .collect::<Result<_>>()?;
                        let frozen =
                            FrozenModel::new(registry::create(&self.model.name)?, &fixed)?;
                        let space = frozen.free_space(&full_space)?;
                        (Box::new(frozen), space, dataset)
                    }
                }
                None => (full_model, full_space, dataset_full),
            };

        let alpha = space.count();
        let defaults = GaConfig::for_alpha(alpha, self.master_seed);
        let population_size = self.ga.population_size.unwrap_or(defaults.population_size);
        let ga = GaConfig {
            population_size,
            generations: self.ga.generations.unwrap_or(defaults.generations),
            crossover_prob: self.ga.crossover_prob.unwrap_or(defaults.crossover_prob),
            mutation_prob: self
                .ga
                .mutation_prob
                .unwrap_or(2.0 / population_size as f64),
            mutation_op: self.ga.mutation_op.unwrap_or_default(),
            elitism: self.ga.elitism.unwrap_or(defaults.elitism),
            seed: self.master_seed,
        };
        ga.validate()?;
        self.lm.validate()?;

        let output_dir = out_override
            .map(Path::to_path_buf)
            .or_else(|| self.output_dir.as_ref().map(|d| base_dir.join(d)))
            .ok_or_else(|| {
                CliError::Config("no output directory (set output_dir or pass --out)".into())
            })?;

        Ok(ResolvedRun {
            model,
            space,
            dataset,
            ga,
            lm: self.lm.clone(),
            scan: self.scan.clone(),
            strategy: self.strategy.clone(),
            master_seed: self.master_seed,
            output_dir,
        })
    }
}
