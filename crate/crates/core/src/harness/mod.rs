//! Configuration, experiment drivers and result emission.

pub mod config;
pub mod emit;
pub mod sweep;
pub mod validate;

use thiserror::Error;

pub use config::{
    db_to_linear, dbm_to_watts, load_config, parse_config_file, resolve_config, ConfigError, ConfigFile,
    ExperimentConfig, Preset, Scheme, SweepAxis,
};
pub use emit::{emit_results, write_csv, write_json, write_records, CsvRow, OutputFormat};
pub use sweep::{run_sweep, DrawOutcome, PointOutcome, ResultRecord, SweepOptions, SweepOutcome, RETRY_FACTOR};
pub use validate::{run_detection_validation, ValidationRecord};

use crate::detection::DetectionError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("runtime error: {0}")]
    Runtime(String),
}
