#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tailbreak::StudyConfig;
use tailbreak_core::market_data::{write_ohlc, OhlcRow};
use tailbreak_core::OhlcSeries;

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

/// Threshold cache shared by every test binary of this crate.
pub fn threshold_cache() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("threshold-cache")
}

/// Daily random-walk OHLC history. Daily return sd is `scale` before
/// `shift_date` and `scale * after` from it on.
pub fn synthetic_ohlc(
    ticker: &str,
    start: NaiveDate,
    days: usize,
    scale: f64,
    shift_date: NaiveDate,
    after: f64,
    seed: u64,
) -> OhlcSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut close = 100.0;
    let rows = (0..days)
        .map(|i| {
            let d = start.checked_add_days(Days::new(i as u64)).unwrap();
            let s = if d >= shift_date { scale * after } else { scale };
            close *= (s * z.sample(&mut rng)).exp();
            let up: f64 = rng.random::<f64>() * s;
            let down: f64 = rng.random::<f64>() * s + 1e-6;
            OhlcRow { date: d, close, high: close * up.exp(), low: close * (-down).exp() }
        })
        .collect();
    OhlcSeries::new(ticker, rows).unwrap()
}

pub fn write_series(dir: &Path, series: &OhlcSeries) {
    fs::create_dir_all(dir).unwrap();
    let mut buf = Vec::new();
    write_ohlc(series, &mut buf).unwrap();
    fs::write(dir.join(format!("{}.csv", series.ticker())), buf).unwrap();
}

/// Short windows inside 2019 so tests stay quick.
pub fn short_config(data_dir: &Path, out_dir: &Path, tickers: &[&str]) -> StudyConfig {
    let list: Vec<String> = tickers.iter().map(|t| format!("\"{t}\"")).collect();
    let text = format!(
        r#"
output_dir = "{out}"
cache_dir = "{cache}"

[data]
dir = "{data}"
tickers = [{list}]

[windows]
pre = {{ start = "2019-07-01", end = "2019-10-31" }}
post = {{ start = "2019-11-01", end = "2019-12-31" }}

[detector]
arl0 = 500.0
burn_in = 20
mc_replications = 2000
rng_seed = 7
"#,
        out = out_dir.display(),
        cache = threshold_cache().display(),
        data = data_dir.display(),
        list = list.join(", "),
    );
    StudyConfig::from_toml(&text).unwrap()
}

/// `n` instruments covering the short windows; the first `narrow` have a
/// tenth of the usual return scale.
pub fn write_panel_dir(dir: &Path, n: usize, narrow: usize, seed: u64) -> Vec<String> {
    (0..n)
        .map(|i| {
            let ticker = format!("T{i:02}");
            let scale = if i < narrow { 0.003 } else { 0.03 };
            let s = synthetic_ohlc(&ticker, date("2019-06-01"), 240, scale, date("2019-11-01"), 2.0, seed + i as u64);
            write_series(dir, &s);
            ticker
        })
        .collect()
}
