use super::calibrate::{calibrate_batch_threshold, ThresholdTable};
use super::statistic::{max_statistic, MannWhitneyWindow};
use super::{BreakSet, DetectorConfig, DetectorError};

/// Result of a batch test that rejected the no-change hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchDetection {
    /// 1-based index of the last observation before the change.
    pub location: usize,
    pub statistic: f64,
    pub threshold: f64,
}

/// Single-change test on a fixed sample at significance `alpha`.
///
/// The threshold is the Monte-Carlo upper `alpha` quantile of the maximal
/// statistic for samples of this length, computed once per process.
pub fn batch_detect(x: &[f64], alpha: f64, cfg: &DetectorConfig) -> Result<Option<BatchDetection>, DetectorError> {
    let needed = 2 * cfg.burn_in;
    if x.len() < needed {
        return Err(DetectorError::InsufficientData { needed, got: x.len() });
    }
    let h = calibrate_batch_threshold(x.len(), alpha, cfg)?;
    Ok(batch_detect_with_threshold(x, h))
}

pub fn batch_detect_with_threshold(x: &[f64], threshold: f64) -> Option<BatchDetection> {
    let (k, d) = max_statistic(x)?;
    (d > threshold).then_some(BatchDetection { location: k, statistic: d, threshold })
}

/// An alarm raised by [`SequentialMonitor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alarm {
    /// Window length when the alarm fired.
    pub time: usize,
    /// Best split of the window at alarm time (1-based, within the window).
    pub location: usize,
    pub statistic: f64,
}

/// Phase II monitor over a single segment.
#[derive(Debug, Clone)]
pub struct SequentialMonitor<'a> {
    thresholds: &'a ThresholdTable,
    window: MannWhitneyWindow,
}

impl<'a> SequentialMonitor<'a> {
    pub fn new(thresholds: &'a ThresholdTable) -> Self {
        Self { thresholds, window: MannWhitneyWindow::new() }
    }

    /// Adds an observation; returns an alarm if `D_t > h_t`.
    pub fn push(&mut self, x: f64) -> Option<Alarm> {
        self.window.push(x);
        let t = self.window.len();
        let h = self.thresholds.threshold(t)?;
        let (k, d) = self.window.max_statistic()?;
        (d > h).then_some(Alarm { time: t, location: k, statistic: d })
    }

    pub fn reset(&mut self) {
        self.window.clear();
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }
}

/// Multi-change sequential detection with restarts.
///
/// After an alarm the break is placed at the window's best split and
/// monitoring restarts from the observation that follows it, re-reading the
/// observations between the break and the alarm.
pub fn sequential_detect(ticker: &str, x: &[f64], thresholds: &ThresholdTable) -> BreakSet {
    let mut breaks = Vec::new();
    let mut monitor = SequentialMonitor::new(thresholds);
    let mut start = 0;
    'segments: while start < x.len() {
        monitor.reset();
        for &v in &x[start..] {
            if let Some(alarm) = monitor.push(v) {
                start += alarm.location;
                breaks.push(start);
                continue 'segments;
            }
        }
        break;
    }
    BreakSet::new(ticker, breaks, x.len()).expect("breaks are increasing and within the series")
}

/// Runs [`sequential_detect`] on `transform(x)`, e.g. residuals of a drift
/// model. The transform must preserve length so indices stay comparable.
pub fn sequential_detect_transformed<F>(
    ticker: &str,
    x: &[f64],
    thresholds: &ThresholdTable,
    transform: F,
) -> Result<BreakSet, DetectorError>
where
    F: FnOnce(&[f64]) -> Vec<f64>,
{
    let y = transform(x);
    if y.len() != x.len() {
        return Err(DetectorError::InvalidConfig(format!(
            "pre-transform changed length from {} to {}",
            x.len(),
            y.len()
        )));
    }
    Ok(sequential_detect(ticker, &y, thresholds))
}
