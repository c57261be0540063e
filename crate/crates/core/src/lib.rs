//! Parameter-identification toolkit: a real-coded genetic algorithm coupled
//! with a normalized, box-constrained Levenberg-Marquardt refiner, plus the
//! statistical search-domain reduction and multi-run ensemble analysis that
//! make identification workable when the data is restricted or redundant.

pub mod error;
pub mod ga;
pub mod lm;
pub mod model;
pub mod objective;
pub mod seed;
pub mod strategy;

pub use error::{Error, Result};
pub use ga::{GaConfig, GaTrace, Individual};
pub use lm::{LmConfig, LmOutcome};
pub use model::{
    clamp_to_bounds, generate_synthetic, ExperimentSet, ForwardModel, Loading, MeasurementSeries,
    ParameterSpace, SensorChannel, StressStep, TestDefinition,
};
pub use objective::{adaptive_fitness, CostBreakdown, Objective, SensorWeight};
pub use strategy::{
    DistributionLabel, EnsembleReport, ParameterDistribution, ScanConfig, ScatterCloud,
    StrategyConfig, Verdict,
};
