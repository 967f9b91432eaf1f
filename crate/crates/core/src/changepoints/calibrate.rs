//! Monte-Carlo threshold calibration.
//!
//! Every replication is an i.i.d. uniform stream drawn from its own ChaCha
//! stream (`seed`, replication index), so tables are bit-reproducible and
//! independent of thread scheduling. The statistic is rank based, so the
//! uniform null stands in for every continuous null distribution.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::statistic::{max_statistic, MannWhitneyWindow};
use super::{DetectorConfig, DetectorError};

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Stream offset separating batch-calibration draws from sequential ones.
const BATCH_STREAM_OFFSET: u64 = 1 << 40;

fn null_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-window-length thresholds `h_t` for `t = burn_in..=t_max`. Lengths past
/// `t_max` reuse `h_{t_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    arl0: f64,
    burn_in: usize,
    t_max: usize,
    replications: usize,
    seed: u64,
    thresholds: Vec<f64>,
}

impl ThresholdTable {
    pub fn arl0(&self) -> f64 {
        self.arl0
    }
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
    pub fn t_max(&self) -> usize {
        self.t_max
    }
    pub fn replications(&self) -> usize {
        self.replications
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Thresholds in window-length order starting at `burn_in`.
    pub fn values(&self) -> &[f64] {
        &self.thresholds
    }

    /// Threshold for a window of `t` observations; `None` during burn-in.
    pub fn threshold(&self, t: usize) -> Option<f64> {
        if t < self.burn_in {
            return None;
        }
        let i = (t - self.burn_in).min(self.thresholds.len() - 1);
        Some(self.thresholds[i])
    }

    pub fn matches(&self, cfg: &DetectorConfig, t_max: usize) -> bool {
        self.arl0 == cfg.arl0
            && self.burn_in == cfg.burn_in
            && self.replications == cfg.mc_replications
            && self.seed == cfg.rng_seed
            && self.t_max == t_max
    }

    pub fn cache_file_name(cfg: &DetectorConfig, t_max: usize) -> String {
        format!(
            "mw-thresholds-v{CACHE_FORMAT_VERSION}-arl{}-burn{}-tmax{}-reps{}-seed{}.txt",
            cfg.arl0, cfg.burn_in, t_max, cfg.mc_replications, cfg.rng_seed
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# mann-whitney threshold table v{CACHE_FORMAT_VERSION}");
        let _ = writeln!(s, "arl0 {}", self.arl0);
        let _ = writeln!(s, "burn_in {}", self.burn_in);
        let _ = writeln!(s, "t_max {}", self.t_max);
        let _ = writeln!(s, "replications {}", self.replications);
        let _ = writeln!(s, "seed {}", self.seed);
        for (i, h) in self.thresholds.iter().enumerate() {
            let _ = writeln!(s, "{} {}", self.burn_in + i, h);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        if header != format!("# mann-whitney threshold table v{CACHE_FORMAT_VERSION}") {
            return Err(format!("unsupported header {header:?}"));
        }
        let mut field = |name: &str| -> Result<String, String> {
            let line = lines.next().ok_or(format!("missing {name}"))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or(format!("expected {name}, got {line:?}"))
        };
        let num_err = |e: std::num::ParseIntError| e.to_string();
        let arl0 = field("arl0")?.parse::<f64>().map_err(|e| e.to_string())?;
        let burn_in = field("burn_in")?.parse::<usize>().map_err(num_err)?;
        let t_max = field("t_max")?.parse::<usize>().map_err(num_err)?;
        let replications = field("replications")?.parse::<usize>().map_err(num_err)?;
        let seed = field("seed")?.parse::<u64>().map_err(num_err)?;
        let mut thresholds = Vec::new();
        for (i, line) in lines.enumerate() {
            let (t, h) = line.split_once(' ').ok_or(format!("malformed row {line:?}"))?;
            if t.parse::<usize>().map_err(num_err)? != burn_in + i {
                return Err(format!("row {line:?} out of sequence"));
            }
            let h = h.parse::<f64>().map_err(|e| e.to_string())?;
            if !(h.is_finite() && h > 0.0) {
                return Err(format!("invalid threshold {h}"));
            }
            thresholds.push(h);
        }
        if t_max < burn_in || thresholds.len() != t_max - burn_in + 1 {
            return Err("threshold count does not match t_max".into());
        }
        Ok(Self { arl0, burn_in, t_max, replications, seed, thresholds })
    }
}

/// Statistic trajectory `D_t, t = burn_in..=t_max` of one null stream.
fn null_trajectory(seed: u64, rep: usize, burn_in: usize, t_max: usize) -> Vec<f64> {
    let mut rng = null_stream(seed, rep as u64);
    let mut window = MannWhitneyWindow::with_capacity(t_max);
    let mut out = Vec::with_capacity(t_max + 1 - burn_in);
    for t in 1..=t_max {
        window.push(rng.random::<f64>());
        if t >= burn_in {
            out.push(window.max_statistic().map_or(0.0, |(_, d)| d));
        }
    }
    out
}

/// Index of the empirical `(1 - alpha)` quantile in a sorted sample of `n`.
fn upper_quantile_index(n: usize, alpha: f64) -> usize {
    (((1.0 - alpha) * n as f64).ceil() as usize).clamp(1, n) - 1
}

/// Sequential thresholds with constant conditional false-alarm probability
/// `1 / arl0`.
///
/// At each window length the threshold is the empirical upper quantile of the
/// statistic over replications that have not alarmed at any earlier length.
pub fn calibrate_thresholds(cfg: &DetectorConfig, t_max: usize) -> Result<ThresholdTable, DetectorError> {
    cfg.validate()?;
    if t_max <= cfg.burn_in {
        return Err(DetectorError::InvalidConfig(format!("t_max ({t_max}) must exceed burn_in ({})", cfg.burn_in)));
    }
    let alpha = cfg.alpha();
    let needed = (1.0 / alpha).ceil() as usize;
    let trajectories: Vec<Vec<f64>> = (0..cfg.mc_replications)
        .into_par_iter()
        .map(|rep| null_trajectory(cfg.rng_seed, rep, cfg.burn_in, t_max))
        .collect();

    let mut alive: Vec<usize> = (0..cfg.mc_replications).collect();
    let mut thresholds = Vec::with_capacity(t_max + 1 - cfg.burn_in);
    let mut sample = Vec::with_capacity(cfg.mc_replications);
    for (step, t) in (cfg.burn_in..=t_max).enumerate() {
        if alive.len() < needed {
            return Err(DetectorError::CalibrationQuality {
                t,
                survivors: alive.len(),
                replications: cfg.mc_replications,
                needed,
            });
        }
        sample.clear();
        sample.extend(alive.iter().map(|&r| trajectories[r][step]));
        let idx = upper_quantile_index(sample.len(), alpha);
        let (_, h, _) = sample.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
        let h = *h;
        if !(h.is_finite() && h > 0.0) {
            return Err(DetectorError::CalibrationQuality {
                t,
                survivors: alive.len(),
                replications: cfg.mc_replications,
                needed,
            });
        }
        thresholds.push(h);
        alive.retain(|&r| trajectories[r][step] <= h);
    }
    Ok(ThresholdTable {
        arl0: cfg.arl0,
        burn_in: cfg.burn_in,
        t_max,
        replications: cfg.mc_replications,
        seed: cfg.rng_seed,
        thresholds,
    })
}

/// [`calibrate_thresholds`] backed by a file cache in `dir`. A cached table is
/// used only if its header matches the request exactly.
pub fn calibrate_thresholds_cached(
    cfg: &DetectorConfig,
    t_max: usize,
    dir: &Path,
) -> Result<(ThresholdTable, PathBuf), DetectorError> {
    let path = dir.join(ThresholdTable::cache_file_name(cfg, t_max));
    if let Ok(text) = fs::read_to_string(&path) {
        match ThresholdTable::from_text(&text) {
            Ok(table) if table.matches(cfg, t_max) => return Ok((table, path)),
            Ok(_) => {}
            Err(message) => {
                return Err(DetectorError::Cache { path: path.display().to_string(), message });
            }
        }
    }
    let table = calibrate_thresholds(cfg, t_max)?;
    fs::create_dir_all(dir)?;
    // Unique temp name: concurrent writers of the same table must not collide.
    static WRITES: AtomicU64 = AtomicU64::new(0);
    let tmp = path.with_extension(format!("tmp-{}-{}", std::process::id(), WRITES.fetch_add(1, Ordering::Relaxed)));
    fs::write(&tmp, table.to_text())?;
    fs::rename(&tmp, &path)?;
    Ok((table, path))
}

type BatchKey = (usize, u64, usize, u64);

fn batch_cache() -> &'static Mutex<HashMap<BatchKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<BatchKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Upper `alpha` quantile of `max_k D_{k,n}` under the null, memoized per
/// process.
pub fn calibrate_batch_threshold(n: usize, alpha: f64, cfg: &DetectorConfig) -> Result<f64, DetectorError> {
    if n < 4 {
        return Err(DetectorError::InsufficientData { needed: 4, got: n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DetectorError::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if cfg.mc_replications < 1000 {
        return Err(DetectorError::InvalidConfig("mc_replications must be >= 1000".into()));
    }
    let key = (n, alpha.to_bits(), cfg.mc_replications, cfg.rng_seed);
    if let Some(h) = batch_cache().lock().expect("batch cache poisoned").get(&key) {
        return Ok(*h);
    }
    let mut maxima: Vec<f64> = (0..cfg.mc_replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = null_stream(cfg.rng_seed, BATCH_STREAM_OFFSET + rep as u64);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            max_statistic(&x).map_or(0.0, |(_, d)| d)
        })
        .collect();
    let idx = upper_quantile_index(maxima.len(), alpha);
    let (_, h, _) = maxima.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
    let h = *h;
    batch_cache().lock().expect("batch cache poisoned").insert(key, h);
    Ok(h)
}
