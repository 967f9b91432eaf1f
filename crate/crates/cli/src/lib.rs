//! Study runner for tail-extremity and structural-break analysis of asset
//! panels: configuration, data acquisition, the end-to-end pipeline, the
//! artifact bundle and the summary report.

pub mod config;
pub mod error;
pub mod fetch;
pub mod report;
pub mod study;

pub use config::StudyConfig;
pub use error::CliError;
pub use study::{analyze, run_study, StudyOutcome, StudyResults};
