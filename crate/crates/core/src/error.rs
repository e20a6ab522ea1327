use thiserror::Error;

/// Errors raised across the simulator, controllers and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation (point outside free
    /// space, degenerate angular interval, malformed polygon, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Rejection sampling could not place users or waypoints.
    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// Non-finite values showed up during simulation.
    #[error("simulation fault at frame {frame}: {detail}")]
    SimulationFault { frame: u64, detail: String },

    /// Non-finite parameters or loss during training.
    #[error("training diverged at update {update}: {detail}")]
    TrainingDiverged { update: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
