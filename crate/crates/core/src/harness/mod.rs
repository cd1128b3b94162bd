//! Experiment runner: seeded training and transfer runs, metric streams,
//! smoothing, visitation heatmaps, atomic persistence and the CLI.

pub mod cli;
mod config;
mod heatmap;
mod io;
mod metrics;
mod run;
mod smooth;

pub use config::{ExperimentConfig, CONFIG_VERSION, DEFAULT_SEEDS, DEFAULT_SMOOTHING_WINDOW};
pub use heatmap::HeatmapGrid;
pub use io::{write_atomic, RunArtifacts};
pub use metrics::{EpisodeRecord, RunMetrics, METRICS_CSV_HEADER_PREFIX};
pub use run::{mode_label, run_seed, run_training, run_transfer, run_transfer_seed, RunOutput};
pub use smooth::{
    aggregate, first_crossing, smooth, window_stats, AggregatePoint, SmoothedPoint, WindowStats,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::agent::{AgentError, CheckpointError};
use crate::gridworld::EnvError;
use crate::views::ViewError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Views(#[from] ViewError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("no episodes to smooth")]
    EmptyMetrics,
}
