//! Nonparametric change-point detection with the Mann-Whitney change-point
//! model.
//!
//! Batch mode tests a fixed sample for a single change. Sequential mode grows
//! a window one observation at a time, raises an alarm when the maximal
//! statistic crosses a time-varying threshold, records the best split as a
//! break and restarts from the observation after it. Thresholds are chosen by
//! Monte-Carlo so that the conditional false-alarm probability at every window
//! length is `1 / arl0`.

mod calibrate;
mod detect;
mod statistic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibrate::{
    calibrate_batch_threshold, calibrate_thresholds, calibrate_thresholds_cached, ThresholdTable, CACHE_FORMAT_VERSION,
};
pub use detect::{
    batch_detect, batch_detect_with_threshold, sequential_detect, sequential_detect_transformed, Alarm, BatchDetection,
    SequentialMonitor,
};
pub use statistic::{mann_whitney_statistic, max_over_splits, max_statistic, twice_midranks, MannWhitneyWindow};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("split {k} outside 2..={} for n = {n}", n.saturating_sub(2))]
    SplitOutOfRange { k: usize, n: usize },
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "only {survivors} of {replications} replications survive to t = {t}; at least {needed} are needed, increase mc_replications"
    )]
    CalibrationQuality { t: usize, survivors: usize, replications: usize, needed: usize },
    #[error("threshold cache {path}: {message}")]
    Cache { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of the sequential detector and its threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Average run length under the null, `1 / alpha`.
    pub arl0: f64,
    /// Observations in a window before monitoring starts.
    pub burn_in: usize,
    pub mc_replications: usize,
    pub rng_seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { arl0: 500.0, burn_in: 20, mc_replications: 10_000, rng_seed: 2020 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if !(self.arl0.is_finite() && self.arl0 >= 50.0) {
            return Err(DetectorError::InvalidConfig(format!("arl0 must be >= 50, got {}", self.arl0)));
        }
        if self.burn_in < 4 {
            return Err(DetectorError::InvalidConfig(format!("burn_in must be >= 4, got {}", self.burn_in)));
        }
        if self.mc_replications < 1000 {
            return Err(DetectorError::InvalidConfig(format!(
                "mc_replications must be >= 1000, got {}",
                self.mc_replications
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.arl0
    }
}

/// Detected break indices of one series. Index `b` (1-based) means the
/// distribution changes after observation `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakSet {
    ticker: String,
    breaks: Vec<usize>,
    series_length: usize,
}

impl BreakSet {
    pub fn new(ticker: impl Into<String>, breaks: Vec<usize>, series_length: usize) -> Result<Self, DetectorError> {
        if breaks.iter().any(|&b| b < 1 || b > series_length) {
            return Err(DetectorError::InvalidConfig(format!("break indices must lie in 1..={series_length}")));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DetectorError::InvalidConfig("break indices must be strictly increasing".into()));
        }
        Ok(Self { ticker: ticker.into(), breaks, series_length })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    pub fn series_length(&self) -> usize {
        self.series_length
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }

    /// `ticker<TAB>T<TAB>b1,b2,...`
    pub fn to_line(&self) -> String {
        let list = self.breaks.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        format!("{}\t{}\t{}", self.ticker, self.series_length, list)
    }

    pub fn from_line(line: &str) -> Result<Self, DetectorError> {
        let bad = || DetectorError::InvalidConfig(format!("malformed break set line {line:?}"));
        let mut parts = line.split('\t');
        let ticker = parts.next().ok_or_else(bad)?;
        let t = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let list = parts.next().unwrap_or("");
        let breaks = if list.is_empty() {
            Vec::new()
        } else {
            list.split(',').map(|s| s.parse().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        Self::new(ticker, breaks, t)
    }
}
