//! Error type shared by all identification stages.

use thiserror::Error;

/// Errors produced by models, objectives, solvers and the strategy layer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A vector had the wrong length for the operation.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Parameter space bounds are malformed.
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    /// A configuration value violates its documented constraints.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A model parameter is outside the model's mathematical domain.
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: String, value: f64 },

    /// A sensor id was requested that the test does not define.
    #[error("unknown sensor `{sensor_id}` in test `{test_id}`")]
    UnknownSensor { test_id: String, sensor_id: String },

    /// A model name is not registered.
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    /// A measurement series is missing for a (test, sensor) pair.
    #[error("missing measurement series for test `{test_id}`, sensor `{sensor_id}`")]
    MissingSeries { test_id: String, sensor_id: String },

    /// All measurements of a sensor are zero, so the weighting is undefined.
    #[error("all-zero measurement series for sensor `{sensor_id}`: weighting coefficient is degenerate")]
    DegenerateWeight { sensor_id: String },

    /// Acquisition times are not strictly increasing.
    #[error("acquisition times not strictly increasing for sensor `{sensor_id}` at index {index}")]
    NonMonotoneTimes { sensor_id: String, index: usize },

    /// Fitness values are unusable for proportional selection.
    #[error("selection requires positive finite fitness values: {0}")]
    InvalidFitness(String),

    /// A starting point violates the box constraints.
    #[error("starting point outside bounds: {0}")]
    OutOfBounds(String),

    /// The refinement solver failed.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Too few retained points or surviving runs to analyze.
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
