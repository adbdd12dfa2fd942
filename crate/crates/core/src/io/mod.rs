//! File formats: spin-system config, peak lists, transition and
//! connectivity tables, spectra, diagrams, and atomic output writing.

mod config;
mod format;
mod tables;
mod write;

pub use config::{parse_config, parse_config_str, read_system};
pub use format::{sig9, sig9_str, to_json};
pub use tables::{
    connectivity_to_csv, parse_connectivity, parse_connectivity_str, parse_peaklist,
    parse_peaklist_str, parse_transitions, parse_transitions_str, peaklist_to_csv, spectrum_to_csv,
    trace_to_csv, transitions_to_csv,
};
pub use write::{write_atomic, OutputSet};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("line {line}: {message}: `{text}`")]
    Row {
        line: u64,
        message: String,
        text: String,
    },
    #[error("missing or malformed header, expected `{expected}`")]
    Header { expected: String },
    #[error(transparent)]
    Spin(#[from] crate::spin::SpinError),
    #[error(transparent)]
    Peaks(#[from] crate::zcosy::ZcosyError),
}
