//! OHLC ingestion and the derived return / variance series.
//!
//! Raw files are delimiter-separated text with a header row. Rows with a
//! missing OHLC field (or zero volume, when a volume column is configured) are
//! dropped and reported; everything else must validate or ingestion fails.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default pre-crisis analysis window (inclusive).
pub const PRE_WINDOW: (NaiveDate, NaiveDate) =
    (NaiveDate::from_ymd_opt(2018, 6, 30).unwrap(), NaiveDate::from_ymd_opt(2019, 12, 31).unwrap());

/// Default crisis analysis window (inclusive).
pub const POST_WINDOW: (NaiveDate, NaiveDate) =
    (NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2020, 6, 24).unwrap());

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },
    #[error("header has no column named `{0}`")]
    MissingColumn(String),
    #[error("{ticker}: need at least {needed} observations, got {got}")]
    InsufficientData { ticker: String, needed: usize, got: usize },
    #[error("{ticker}: no observations between {start} and {end}")]
    EmptyWindow { ticker: String, start: NaiveDate, end: NaiveDate },
    #[error("invalid window: start {start} is after end {end}")]
    InvalidWindow { start: NaiveDate, end: NaiveDate },
    #[error("date grids do not intersect: {0}")]
    Alignment(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MarketDataError>;

/// Accepts `YYYY-MM-DD` and `DD-MM-YYYY`.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d").or_else(|_| NaiveDate::parse_from_str(s, "%d-%m-%Y")).ok()
}

/// Column names and delimiter of a raw OHLC file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OhlcSchema {
    pub date: String,
    pub close: String,
    pub high: String,
    pub low: String,
    /// When set, rows with zero volume are dropped.
    pub volume: Option<String>,
    pub delimiter: char,
}

impl Default for OhlcSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            close: "close".into(),
            high: "high".into(),
            low: "low".into(),
            volume: None,
            delimiter: ',',
        }
    }
}

/// Daily close/high/low history of one instrument, sorted by date.
#[derive(Debug, Clone, PartialEq)]
pub struct OhlcSeries {
    ticker: String,
    dates: Vec<NaiveDate>,
    close: Vec<f64>,
    high: Vec<f64>,
    low: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhlcRow {
    pub date: NaiveDate,
    pub close: f64,
    pub high: f64,
    pub low: f64,
}

impl OhlcSeries {
    /// Validates and sorts `rows`. Errors name the position in `rows`
    /// (1-based) unless the caller supplies line numbers via
    /// [`OhlcSeries::from_numbered_rows`].
    pub fn new(ticker: impl Into<String>, rows: Vec<OhlcRow>) -> Result<Self> {
        let numbered = rows.into_iter().enumerate().map(|(i, r)| (i as u64 + 1, r)).collect();
        Self::from_numbered_rows(ticker, numbered)
    }

    pub fn from_numbered_rows(ticker: impl Into<String>, mut rows: Vec<(u64, OhlcRow)>) -> Result<Self> {
        for (line, r) in &rows {
            let line = *line;
            for (name, v) in [("close", r.close), ("high", r.high), ("low", r.low)] {
                if !v.is_finite() || v <= 0.0 {
                    return Err(MarketDataError::Validation {
                        line,
                        message: format!("{name} price must be positive and finite, got {v}"),
                    });
                }
            }
            if r.low > r.high {
                return Err(MarketDataError::Validation {
                    line,
                    message: format!("low {} exceeds high {}", r.low, r.high),
                });
            }
        }
        rows.sort_by_key(|(_, r)| r.date);
        for w in rows.windows(2) {
            if w[0].1.date == w[1].1.date {
                return Err(MarketDataError::Validation {
                    line: w[1].0,
                    message: format!("duplicate date {} (also on line {})", w[1].1.date, w[0].0),
                });
            }
        }
        Ok(Self {
            ticker: ticker.into(),
            dates: rows.iter().map(|(_, r)| r.date).collect(),
            close: rows.iter().map(|(_, r)| r.close).collect(),
            high: rows.iter().map(|(_, r)| r.high).collect(),
            low: rows.iter().map(|(_, r)| r.low).collect(),
        })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    pub fn close(&self) -> &[f64] {
        &self.close
    }
    pub fn high(&self) -> &[f64] {
        &self.high
    }
    pub fn low(&self) -> &[f64] {
        &self.low
    }
    pub fn len(&self) -> usize {
        self.dates.len()
    }
    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Outcome of parsing one raw file: the series plus the lines that were
/// dropped for missing fields or zero volume.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub series: OhlcSeries,
    pub dropped_lines: Vec<u64>,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("null")
}

/// Parses a raw OHLC file.
pub fn parse_ohlc<R: Read>(raw: R, ticker: &str, schema: &OhlcSchema) -> Result<OhlcSeries> {
    parse_ohlc_with_report(raw, ticker, schema).map(|i| i.series)
}

pub fn parse_ohlc_with_report<R: Read>(raw: R, ticker: &str, schema: &OhlcSchema) -> Result<Ingested> {
    if !schema.delimiter.is_ascii() {
        return Err(MarketDataError::Invalid(format!(
            "delimiter {:?} is not a single-byte character",
            schema.delimiter
        )));
    }
    let mut reader = csv::ReaderBuilder::new().delimiter(schema.delimiter as u8).trim(csv::Trim::All).from_reader(raw);
    let headers = reader.headers().map_err(|e| MarketDataError::Parse { line: 1, message: e.to_string() })?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| MarketDataError::MissingColumn(name.to_string()))
    };
    let date_col = column(&schema.date)?;
    let close_col = column(&schema.close)?;
    let high_col = column(&schema.high)?;
    let low_col = column(&schema.low)?;
    let volume_col = schema.volume.as_deref().map(column).transpose()?;

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize, name: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| MarketDataError::Parse {
                line,
                message: format!("{name} value {:?} is not a number", field(i)),
            })
        };

        if [date_col, close_col, high_col, low_col].iter().any(|&c| is_missing(field(c))) {
            dropped.push(line);
            continue;
        }
        if let Some(vc) = volume_col {
            if is_missing(field(vc)) || number(vc, "volume")? == 0.0 {
                dropped.push(line);
                continue;
            }
        }
        let date = parse_date(field(date_col)).ok_or_else(|| MarketDataError::Parse {
            line,
            message: format!("unrecognised date {:?}", field(date_col)),
        })?;
        rows.push((
            line,
            OhlcRow {
                date,
                close: number(close_col, "close")?,
                high: number(high_col, "high")?,
                low: number(low_col, "low")?,
            },
        ));
    }
    Ok(Ingested { series: OhlcSeries::from_numbered_rows(ticker, rows)?, dropped_lines: dropped })
}

/// Writes the canonical form: ISO dates, `date,close,high,low` columns.
pub fn write_ohlc<W: Write>(series: &OhlcSeries, mut out: W) -> Result<()> {
    writeln!(out, "date,close,high,low")?;
    for i in 0..series.len() {
        writeln!(out, "{},{},{},{}", series.dates[i], series.close[i], series.high[i], series.low[i])?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    LogReturn,
    ParkinsonVariance,
    Other,
}

impl SeriesKind {
    pub fn short_name(self) -> &'static str {
        match self {
            SeriesKind::LogReturn => "returns",
            SeriesKind::ParkinsonVariance => "variance",
            SeriesKind::Other => "values",
        }
    }
}

/// A dated real-valued series for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSeries {
    ticker: String,
    kind: SeriesKind,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ValueSeries {
    pub fn new(ticker: impl Into<String>, kind: SeriesKind, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(MarketDataError::Invalid(format!("{} dates but {} values", dates.len(), values.len())));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(MarketDataError::Invalid(format!("dates not strictly increasing at {} -> {}", w[0], w[1])));
        }
        if kind == SeriesKind::ParkinsonVariance {
            if let Some(v) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
                return Err(MarketDataError::Invalid(format!("negative variance {v}")));
            }
        }
        Ok(Self { ticker: ticker.into(), kind, dates, values })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }
    pub fn kind(&self) -> SeriesKind {
        self.kind
    }
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `R_t = ln(P_t / P_{t-1})`, dated at the later observation.
pub fn log_returns(s: &OhlcSeries) -> Result<ValueSeries> {
    if s.len() < 2 {
        return Err(MarketDataError::InsufficientData { ticker: s.ticker.clone(), needed: 2, got: s.len() });
    }
    let values = s.close.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ValueSeries::new(s.ticker.clone(), SeriesKind::LogReturn, s.dates[1..].to_vec(), values)
}

/// Parkinson variance `(ln H - ln L)^2 / (4 ln 2)` for each day.
pub fn parkinson_variance(s: &OhlcSeries) -> ValueSeries {
    let denom = 4.0 * std::f64::consts::LN_2;
    let values = s
        .high
        .iter()
        .zip(&s.low)
        .map(|(h, l)| {
            let range = h.ln() - l.ln();
            range * range / denom
        })
        .collect();
    ValueSeries { ticker: s.ticker.clone(), kind: SeriesKind::ParkinsonVariance, dates: s.dates.clone(), values }
}

/// Keeps observations with `start <= date <= end`.
pub fn slice_period(s: &ValueSeries, start: NaiveDate, end: NaiveDate) -> Result<ValueSeries> {
    if start > end {
        return Err(MarketDataError::InvalidWindow { start, end });
    }
    let lo = s.dates.partition_point(|d| *d < start);
    let hi = s.dates.partition_point(|d| *d <= end);
    if lo >= hi {
        return Err(MarketDataError::EmptyWindow { ticker: s.ticker.clone(), start, end });
    }
    Ok(ValueSeries {
        ticker: s.ticker.clone(),
        kind: s.kind,
        dates: s.dates[lo..hi].to_vec(),
        values: s.values[lo..hi].to_vec(),
    })
}

/// Instruments by dates, every cell populated.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    kind: SeriesKind,
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    /// One row per instrument, one column per date.
    rows: Vec<Vec<f64>>,
}

impl Panel {
    pub fn new(kind: SeriesKind, tickers: Vec<String>, dates: Vec<NaiveDate>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() != rows.len() {
            return Err(MarketDataError::Invalid("one row per ticker required".into()));
        }
        if rows.iter().any(|r| r.len() != dates.len()) {
            return Err(MarketDataError::Invalid("every row must cover every date".into()));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MarketDataError::Invalid("panel dates must be strictly increasing".into()));
        }
        Ok(Self { kind, tickers, dates, rows })
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }
    pub fn n_instruments(&self) -> usize {
        self.tickers.len()
    }
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    /// Values of every instrument on date index `t`.
    pub fn column(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[t])
    }

    /// Restricts the date grid to `start..=end`.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<Panel> {
        if start > end {
            return Err(MarketDataError::InvalidWindow { start, end });
        }
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        if lo >= hi {
            return Err(MarketDataError::EmptyWindow { ticker: "<panel>".into(), start, end });
        }
        Ok(Panel {
            kind: self.kind,
            tickers: self.tickers.clone(),
            dates: self.dates[lo..hi].to_vec(),
            rows: self.rows.iter().map(|r| r[lo..hi].to_vec()).collect(),
        })
    }

    /// Keeps only the instruments at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Panel {
        Panel {
            kind: self.kind,
            tickers: indices.iter().map(|&i| self.tickers[i].clone()).collect(),
            dates: self.dates.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Aligns series on the intersection of their date grids, keeping input order.
pub fn align_panel(series: &[ValueSeries]) -> Result<Panel> {
    if series.len() < 2 {
        return Err(MarketDataError::Invalid(format!("alignment needs at least 2 series, got {}", series.len())));
    }
    let kind = series[0].kind;
    if let Some(s) = series.iter().find(|s| s.kind != kind) {
        return Err(MarketDataError::Invalid(format!("{} is a {:?} series, expected {:?}", s.ticker, s.kind, kind)));
    }
    let mut common: BTreeSet<NaiveDate> = series[0].dates.iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates.iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.is_empty() {
        let ranges = series
            .iter()
            .map(|s| match (s.dates.first(), s.dates.last()) {
                (Some(a), Some(b)) => format!("{} [{a}..{b}]", s.ticker),
                _ => format!("{} [empty]", s.ticker),
            })
            .collect::<Vec<_>>()
            .join(", ");
        return Err(MarketDataError::Alignment(ranges));
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let rows = series
        .iter()
        .map(|s| {
            let mut j = 0;
            dates
                .iter()
                .map(|d| {
                    while s.dates[j] < *d {
                        j += 1;
                    }
                    s.values[j]
                })
                .collect()
        })
        .collect();
    Ok(Panel { kind, tickers: series.iter().map(|s| s.ticker.clone()).collect(), dates, rows })
}

/// Two-column `date,<ticker>` table.
pub fn write_value_series<W: Write>(s: &ValueSeries, mut out: W, delimiter: char) -> Result<()> {
    writeln!(out, "date{delimiter}{}", s.ticker)?;
    for (d, v) in s.dates.iter().zip(&s.values) {
        writeln!(out, "{d}{delimiter}{v}")?;
    }
    Ok(())
}

/// `date,<ticker 1>,...,<ticker n>` table, one line per date.
pub fn write_panel<W: Write>(p: &Panel, mut out: W, delimiter: char) -> Result<()> {
    write!(out, "date")?;
    for t in &p.tickers {
        write!(out, "{delimiter}{t}")?;
    }
    writeln!(out)?;
    for (t, d) in p.dates.iter().enumerate() {
        write!(out, "{d}")?;
        for r in &p.rows {
            write!(out, "{delimiter}{}", r[t])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a table written by [`write_panel`] (or any `date,<tickers...>`
/// table without gaps).
pub fn read_panel<R: Read>(raw: R, kind: SeriesKind, delimiter: char) -> Result<Panel> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter as u8).trim(csv::Trim::All).from_reader(raw);
    let headers = reader.headers().map_err(|e| MarketDataError::Parse { line: 1, message: e.to_string() })?.clone();
    let tickers: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut rows = vec![Vec::new(); tickers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[0])
            .ok_or_else(|| MarketDataError::Parse { line, message: format!("unrecognised date {:?}", &record[0]) })?;
        dates.push(date);
        for (i, row) in rows.iter_mut().enumerate() {
            let v = record[i + 1].parse::<f64>().map_err(|_| MarketDataError::Parse {
                line,
                message: format!("value {:?} is not a number", &record[i + 1]),
            })?;
            row.push(v);
        }
    }
    Panel::new(kind, tickers, dates, rows)
}
