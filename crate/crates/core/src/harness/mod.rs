//! Configuration, presets, replicated experiments, sweeps and result files.

mod config;
mod experiment;
mod plot;
mod presets;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    param_column_name, parse_config, ClassConfig, ClusterConfig, ConfigError, ExperimentConfig,
    RunConfig,
};
pub use experiment::{
    aggregate_runs, record_run, run_experiment, run_sweep, simulate_experiment, simulate_sweep,
    verify, AggregateRow, ExperimentOutput, RunRecord, SampleRecord, SweepOutput, SweepSpec,
    VerifyReport, SCHEMA_VERSION,
};
pub use plot::{emit_plot_data, figure_names, read_sweep_csv, write_delay_cdf, SweepTable};
pub use presets::{
    delta4_grid, list_presets, preset, run_preset, table1_config, Preset, PresetInfo,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: missing columns {columns:?}")]
    MissingColumns { path: PathBuf, columns: Vec<String> },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("unknown figure `{0}`")]
    UnknownFigure(String),
    #[error("simulation reported invariant violations: {0}")]
    Invariant(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        HarnessError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_) | HarnessError::UnknownPreset(_) | HarnessError::UnknownFigure(_)
        )
    }
}
