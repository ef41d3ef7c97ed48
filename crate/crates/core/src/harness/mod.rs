//! Experiment orchestration: run configuration, seeded training and greedy
//! evaluation, constant-action baselines, sweeps and checkpoints.

mod checkpoint;
mod config;
mod metrics;
mod run;
mod sweep;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{RunConfig, SweepConfig, CONFIG_VERSION, OUTPUT_ROOT_ENV};
pub use metrics::{
    fmt_float, write_history_csv, write_metrics_csv, write_timing_csv, EpisodeStats, HistoryRow, MetricsRow,
};
pub use run::{
    evaluate, evaluate_with_env, run_baseline, train, train_with_env, EvalReport, TrainReport,
};
pub use sweep::{sweep, SweepAxis, SweepCell, SweepReport};

use crate::bridge::BridgeError;
use crate::rl::RlError;
use crate::thermal::ThermalError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Agent(#[from] RlError),
    #[error(transparent)]
    Env(#[from] BridgeError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
