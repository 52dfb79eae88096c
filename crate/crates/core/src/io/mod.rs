//! Config loading, snapshots, CSV traces, annotation and plot data.

mod annotate;
mod artifacts;
mod config;
mod plot;
mod snapshot;
mod trace;

use std::path::Path;

use thiserror::Error;

use crate::emotion::EmotionError;
use crate::experiments::ValidationError;
use crate::learner::LearnerError;

pub use annotate::{annotate, annotate_steps, parse_logged_steps, read_logged_steps, LoggedStep};
pub use artifacts::{file_stem, write_outputs};
pub use config::{config_bytes, load_config, parse_config};
pub use plot::{load_summary, plot_data, series_csv, summary_bytes};
pub use snapshot::{load_snapshot, parse_snapshot, save_snapshot, snapshot_bytes, Snapshot, FORMAT_VERSION};
pub use trace::{append_trace, trace_bytes, write_trace, TraceRow, TraceWriter};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", .0.iter().map(|e| format!("validation error: {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<ValidationError>),
    #[error("snapshot format_version {found} is not supported (expected {supported})")]
    VersionMismatch { found: u64, supported: u32 },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown series: {0}")]
    UnknownSeries(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Emotion(#[from] EmotionError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

impl From<std::io::Error> for IoError {
    fn from(source: std::io::Error) -> Self {
        Self::Io {
            path: String::from("<stream>"),
            source,
        }
    }
}

impl IoError {
    pub(crate) fn at(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Problems with the user's input rather than with the run itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Self::Parse { .. }
                | Self::Validation(_)
                | Self::VersionMismatch { .. }
                | Self::SchemaMismatch(_)
                | Self::UnknownSeries(_)
        )
    }
}
