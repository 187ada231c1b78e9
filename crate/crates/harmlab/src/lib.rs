//! Configuration files, artifacts and experiment drivers for the
//! `harmlab` command-line laboratory.

pub mod config;
pub mod experiments;
pub mod field_csv;

use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum HarmlabError {
    #[error("config parse error: {0}")]
    Parse(serde_json::Error),
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error(transparent)]
    Core(#[from] harmlab_core::Error),
}

impl HarmlabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarmlabError::Io { path: path.to_path_buf(), source }
    }

    fn csv(e: impl std::fmt::Display) -> Self {
        HarmlabError::Csv(e.to_string())
    }
}
