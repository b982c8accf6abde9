use rydberg_spt::error::{BlockadeError, GeometryError, HarnessError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("give exactly one of --config or --preset")]
    NoSource,
    #[error("{failed} of {total} sweep points failed")]
    PointsFailed { failed: usize, total: usize },
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Blockade(#[from] BlockadeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
