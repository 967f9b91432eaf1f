use std::path::{Path, PathBuf};

use tailbreak_core::changepoints::DetectorError;
use tailbreak_core::market_data::MarketDataError;
use tailbreak_core::matrix::MatrixError;
use tailbreak_core::setdist::SetDistError;
use tailbreak_core::structure::StructureError;
use tailbreak_core::tails::TailError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error("{ticker}: request failed after {attempts} attempt(s): {message}")]
    Transport { ticker: String, attempts: u32, message: String },
    #[error("{ticker}: server answered {status}")]
    Http { ticker: String, status: u16 },
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Tail(#[from] TailError),
    #[error(transparent)]
    SetDist(#[from] SetDistError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("only {survivors} instrument(s) usable, need at least 2 (excluded: {excluded})")]
    TooFewInstruments { survivors: usize, excluded: String },
    #[error("bundle artifact missing: {0}")]
    MissingArtifact(String),
    #[error("malformed bundle artifact {artifact}: {message}")]
    BadArtifact { artifact: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Stable machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MarketData(_) => "data",
            CliError::Transport { .. } | CliError::Http { .. } => "network",
            CliError::Detector(_) => "detector",
            CliError::Tail(_) | CliError::SetDist(_) | CliError::Structure(_) | CliError::Matrix(_) => "analysis",
            CliError::TooFewInstruments { .. } => "insufficient-instruments",
            CliError::MissingArtifact(_) | CliError::BadArtifact { .. } => "bundle",
            CliError::Io { .. } | CliError::Json(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 3,
            "data" => 4,
            "network" => 5,
            "detector" => 6,
            "analysis" => 7,
            "insufficient-instruments" => 8,
            "bundle" => 9,
            _ => 1,
        }
    }

    /// Whether retrying the same request may succeed.
    pub fn is_retriable(&self) -> bool {
        match self {
            CliError::Transport { .. } => true,
            CliError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}
