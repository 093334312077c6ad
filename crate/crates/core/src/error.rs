use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{count} pixel(s) carry demand but have no serving cell (first: {first:?})")]
    UncoveredDemand { count: usize, first: Vec<usize> },

    #[error("empty series")]
    EmptySeries,

    #[error("mean demand over the period is zero")]
    ZeroMeanDemand,

    #[error("no deployed small cells")]
    NoDeployedCells,

    #[error("total demand is zero; proportional split undefined")]
    ZeroDemand,

    #[error("tenant {0} has no known demand")]
    DemandUnknown(String),

    #[error("small cell {sc} has zero spectral efficiency but carries demand")]
    ZeroSpectralEfficiency { sc: usize },

    #[error("small cell {sc} reported zero resource usage")]
    ZeroResourceUsage { sc: usize },

    #[error("Pearson calibration failed: target {target}, best achieved {achieved}")]
    CalibrationFailure { target: f64, achieved: f64 },

    #[error("requested {requested} channels but only {available} exist")]
    TooManyChannels { requested: usize, available: usize },

    #[error("planning did not converge in phase '{phase}' after {iterations} iterations")]
    NonConvergence {
        phase: &'static str,
        iterations: usize,
        report: Box<crate::planner::PlanReport>,
    },

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
