//! The full study: ingestion, derivation, windows, distance matrices,
//! affinities, inconsistencies, clustering and the artifact bundle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Days;
use rayon::prelude::*;
use serde::Serialize;
use tailbreak_core::changepoints::{calibrate_thresholds_cached, sequential_detect};
use tailbreak_core::market_data::{
    align_panel, log_returns, parkinson_variance, parse_ohlc_with_report, slice_period, write_panel,
};
use tailbreak_core::setdist::{break_distance_matrix, EMPTY_SET_DISTANCE};
use tailbreak_core::structure::{
    affinity, anomaly_scores, behaviour_inconsistency, frobenius_matrix, frobenius_vector_series, hcluster,
    time_inconsistency, ClusterInput, NormSeries, StructureError,
};
use tailbreak_core::tails::{restrict, restrict_rows, restricted_mean, wasserstein1};
use tailbreak_core::{
    AffinityMatrix, AnomalyRanking, BreakSet, Dendrogram, DistanceMatrix, InconsistencyMatrix, OhlcSeries, Panel,
    RestrictedMeasure, SeriesKind, TailKind, ThresholdTable, ValueSeries,
};

use crate::config::{StudyConfig, Window};
use crate::fetch::Fetcher;
use crate::CliError;

/// Anomaly entries kept in the short lists.
pub const TOP_K: usize = 3;
const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Period {
    Pre,
    Post,
}

impl Period {
    pub const ALL: [Period; 2] = [Period::Pre, Period::Post];

    pub fn name(self) -> &'static str {
        match self {
            Period::Pre => "pre",
            Period::Post => "post",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Series {
    Returns,
    Variance,
}

impl Series {
    pub const ALL: [Series; 2] = [Series::Returns, Series::Variance];

    pub fn name(self) -> &'static str {
        match self {
            Series::Returns => "returns",
            Series::Variance => "variance",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Series::Returns => 'R',
            Series::Variance => 'V',
        }
    }

    pub fn kind(self) -> SeriesKind {
        match self {
            Series::Returns => SeriesKind::LogReturn,
            Series::Variance => SeriesKind::ParkinsonVariance,
        }
    }

    pub fn tail(self) -> TailKind {
        match self {
            Series::Returns => TailKind::TwoSided,
            Series::Variance => TailKind::Upper,
        }
    }
}

/// `D_ER_pre`, `D_BV_post`, ...: behaviour letter `E` (extremes) or `B`
/// (breaks), then the series letter.
pub fn distance_name(behaviour: char, series: Series, period: Period) -> String {
    format!("D_{behaviour}{}_{}", series.letter(), period.name())
}

pub fn affinity_name(distance: &str) -> String {
    format!("A{}", &distance[1..])
}

/// Names of the eight distance matrices, in bundle order.
pub fn distance_names() -> Vec<String> {
    Period::ALL
        .iter()
        .flat_map(|&p| ['E', 'B'].into_iter().flat_map(move |b| Series::ALL.map(|s| distance_name(b, s, p))))
        .collect()
}

/// Names of the eight inconsistency matrices, in bundle order.
pub fn inconsistency_names() -> Vec<String> {
    let mut names = Vec::new();
    for p in Period::ALL {
        for s in Series::ALL {
            names.push(format!("INC_behaviour_{}_{}", s.letter(), p.name()));
        }
    }
    for b in ['E', 'B'] {
        for s in Series::ALL {
            names.push(format!("INC_time_{b}{}", s.letter()));
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exclusion {
    pub ticker: String,
    pub stage: String,
    pub reason: String,
}

/// Instruments that made it through ingestion.
#[derive(Debug, Default)]
pub struct Loaded {
    pub series: Vec<OhlcSeries>,
    pub exclusions: Vec<Exclusion>,
    /// Raw rows skipped for missing fields or zero volume, per ticker.
    pub dropped_rows: BTreeMap<String, usize>,
}

/// One aligned window of one series kind, with everything derived from it.
#[derive(Debug, Clone)]
pub struct Cell {
    pub period: Period,
    pub series: Series,
    pub panel: Panel,
    pub measures: Vec<RestrictedMeasure>,
    pub breaks: Vec<BreakSet>,
}

impl Cell {
    pub fn key(&self) -> String {
        format!("{}_{}", self.period.name(), self.series.name())
    }
}

#[derive(Debug, Clone)]
pub struct StudyResults {
    pub tickers: Vec<String>,
    pub exclusions: Vec<Exclusion>,
    pub dropped_rows: BTreeMap<String, usize>,
    pub cells: Vec<Cell>,
    pub norm_series: Vec<(Series, NormSeries)>,
    pub thresholds: ThresholdTable,
    pub threshold_file: String,
    pub distances: Vec<(String, DistanceMatrix)>,
    pub affinities: Vec<AffinityMatrix>,
    /// Affinities taken as all ones because their distance matrix was zero.
    pub degenerate: Vec<String>,
    pub inconsistencies: Vec<(String, InconsistencyMatrix)>,
    pub rankings: Vec<(String, AnomalyRanking)>,
    pub dendrograms: Vec<(String, Dendrogram)>,
}

impl StudyResults {
    pub fn cell(&self, period: Period, series: Series) -> &Cell {
        self.cells.iter().find(|c| c.period == period && c.series == series).expect("all four cells exist")
    }

    pub fn distance(&self, name: &str) -> Option<&DistanceMatrix> {
        self.distances.iter().find(|d| d.0 == name).map(|d| &d.1)
    }

    pub fn affinity(&self, name: &str) -> Option<&AffinityMatrix> {
        self.affinities.iter().find(|a| a.name() == name)
    }

    pub fn inconsistency(&self, name: &str) -> Option<&InconsistencyMatrix> {
        self.inconsistencies.iter().find(|i| i.0 == name).map(|i| &i.1)
    }

    pub fn ranking(&self, name: &str) -> Option<&AnomalyRanking> {
        self.rankings.iter().find(|r| r.0 == name).map(|r| &r.1)
    }

    pub fn dendrogram(&self, name: &str) -> Option<&Dendrogram> {
        self.dendrograms.iter().find(|d| d.0 == name).map(|d| &d.1)
    }

    /// Frobenius norm of each distance matrix, in bundle order.
    pub fn matrix_norms(&self) -> Vec<(String, f64)> {
        self.distances.iter().map(|(n, d)| (n.clone(), frobenius_matrix(d.matrix()))).collect()
    }
}

#[derive(Debug)]
pub struct StudyOutcome {
    pub bundle_dir: PathBuf,
    pub results: StudyResults,
    /// Bundle-relative paths of every file written.
    pub artifacts: Vec<String>,
}

/// Date range requested per instrument: one day before the first window so
/// the first return inside it exists.
pub fn fetch_range(cfg: &StudyConfig) -> (chrono::NaiveDate, chrono::NaiveDate) {
    let start = cfg.windows.pre.start.checked_sub_days(Days::new(1)).unwrap_or(cfg.windows.pre.start);
    (start, cfg.windows.post.end)
}

/// Tickers from the config, or every file matching the pattern in `dir`.
pub fn discover_tickers(cfg: &StudyConfig) -> Result<Vec<String>, CliError> {
    if !cfg.data.tickers.is_empty() {
        return Ok(cfg.data.tickers.clone());
    }
    let dir = cfg.data.dir.as_deref().ok_or_else(|| CliError::Config("data.tickers is empty".into()))?;
    let (prefix, suffix) = cfg.data.file_pattern.split_once("{ticker}").expect("validated pattern");
    let mut tickers: Vec<String> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok()?.file_name().into_string().ok())
        .filter_map(|name| {
            let t = name.strip_prefix(prefix)?.strip_suffix(suffix)?;
            (!t.is_empty()).then(|| t.to_string())
        })
        .collect();
    tickers.sort();
    Ok(tickers)
}

/// Series plus the number of raw rows dropped while parsing it.
type Ingested = (OhlcSeries, usize);

/// Reads or downloads every instrument. Failures become exclusions.
pub fn load_instruments(cfg: &StudyConfig, cache_dir: &Path) -> Result<Loaded, CliError> {
    let tickers = discover_tickers(cfg)?;
    let fetcher = cfg
        .data
        .endpoint
        .as_ref()
        .map(|url| Fetcher::new(url.clone(), cfg.schema.clone(), cfg.data.fetch.clone(), cache_dir));
    let (start, end) = fetch_range(cfg);

    let results: Vec<(String, Result<Ingested, CliError>)> = tickers
        .par_iter()
        .map(|t| {
            let r = match (&fetcher, &cfg.data.dir) {
                (Some(f), _) => f.fetch(t, start, end).map(|got| (got.series, 0)),
                (None, Some(dir)) => {
                    let path = dir.join(cfg.data.file_pattern.replace("{ticker}", t));
                    fs::File::open(&path)
                        .map_err(|e| CliError::io(&path, e))
                        .and_then(|f| Ok(parse_ohlc_with_report(f, t, &cfg.schema)?))
                        .map(|ing| (ing.series, ing.dropped_lines.len()))
                }
                (None, None) => unreachable!("validated data source"),
            };
            (t.clone(), r)
        })
        .collect();

    let mut loaded = Loaded::default();
    for (ticker, r) in results {
        match r {
            Ok((series, dropped)) => {
                if dropped > 0 {
                    loaded.dropped_rows.insert(ticker, dropped);
                }
                loaded.series.push(series);
            }
            Err(e) => loaded.exclusions.push(Exclusion { ticker, stage: "ingest".into(), reason: e.to_string() }),
        }
    }
    Ok(loaded)
}

struct Derived {
    ticker: String,
    returns: ValueSeries,
    variance: ValueSeries,
}

impl Derived {
    fn get(&self, s: Series) -> &ValueSeries {
        match s {
            Series::Returns => &self.returns,
            Series::Variance => &self.variance,
        }
    }
}

fn window_of(cfg: &StudyConfig, p: Period) -> Window {
    match p {
        Period::Pre => cfg.windows.pre,
        Period::Post => cfg.windows.post,
    }
}

fn fraction(cfg: &StudyConfig, s: Series) -> f64 {
    match s {
        Series::Returns => cfg.tails.two_sided,
        Series::Variance => cfg.tails.upper,
    }
}

/// Derives both series and checks that every window can support a tail.
fn derive(cfg: &StudyConfig, s: &OhlcSeries) -> Result<Derived, Exclusion> {
    let exclude = |stage: &str, reason: String| Exclusion { ticker: s.ticker().into(), stage: stage.into(), reason };
    let returns = log_returns(s).map_err(|e| exclude("derive", e.to_string()))?;
    let d = Derived { ticker: s.ticker().into(), returns, variance: parkinson_variance(s) };
    for p in Period::ALL {
        let w = window_of(cfg, p);
        for series in Series::ALL {
            let sliced = slice_period(d.get(series), w.start, w.end)
                .map_err(|e| exclude("window", format!("{} {}: {e}", p.name(), series.name())))?;
            restrict(sliced.values(), series.tail(), fraction(cfg, series))
                .map_err(|e| exclude("window", format!("{} {}: {e}", p.name(), series.name())))?;
        }
    }
    Ok(d)
}

fn aligned(derived: &[Derived], series: Series, w: Window) -> Result<Panel, CliError> {
    let sliced = derived.iter().map(|d| slice_period(d.get(series), w.start, w.end)).collect::<Result<Vec<_>, _>>()?;
    Ok(align_panel(&sliced)?)
}

/// Everything after ingestion. Thresholds are calibrated (or read) under
/// `cache_dir/thresholds`.
pub fn analyze(
    cfg: &StudyConfig,
    series: &[OhlcSeries],
    mut exclusions: Vec<Exclusion>,
    cache_dir: &Path,
) -> Result<StudyResults, CliError> {
    let checked: Vec<Result<Derived, Exclusion>> = series.par_iter().map(|s| derive(cfg, s)).collect();
    let mut derived = Vec::new();
    for c in checked {
        match c {
            Ok(d) => derived.push(d),
            Err(e) => exclusions.push(e),
        }
    }
    exclusions.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    if derived.len() < 2 {
        let excluded = exclusions.iter().map(|e| format!("{} [{}]", e.ticker, e.stage)).collect::<Vec<_>>().join(", ");
        return Err(CliError::TooFewInstruments { survivors: derived.len(), excluded });
    }
    let tickers: Vec<String> = derived.iter().map(|d| d.ticker.clone()).collect();

    let mut cells = Vec::new();
    for p in Period::ALL {
        for s in Series::ALL {
            let panel = aligned(&derived, s, window_of(cfg, p))?;
            let measures = restrict_rows(panel.tickers(), panel.rows(), s.tail(), fraction(cfg, s))?;
            cells.push(Cell { period: p, series: s, panel, measures, breaks: Vec::new() });
        }
    }

    let span = Window { start: cfg.windows.pre.start, end: cfg.windows.post.end };
    let norm_series = Series::ALL
        .iter()
        .map(|&s| Ok((s, frobenius_vector_series(&aligned(&derived, s, span)?))))
        .collect::<Result<Vec<_>, CliError>>()?;

    let t_max = cells.iter().map(|c| c.panel.n_dates()).max().unwrap_or(0).max(cfg.detector.burn_in + 1);
    let (thresholds, path) = calibrate_thresholds_cached(&cfg.detector, t_max, &cache_dir.join("thresholds"))?;
    let threshold_file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    for cell in &mut cells {
        let panel = &cell.panel;
        cell.breaks = panel
            .tickers()
            .par_iter()
            .zip(panel.rows().par_iter())
            .map(|(t, row)| sequential_detect(t, row, &thresholds))
            .collect();
    }

    let mut distances = Vec::new();
    for p in Period::ALL {
        for b in ['E', 'B'] {
            for s in Series::ALL {
                let cell = cells.iter().find(|c| c.period == p && c.series == s).expect("cell");
                let d = if b == 'E' {
                    let m = &cell.measures;
                    DistanceMatrix::from_pairs(tickers.clone(), |i, j| wasserstein1(&m[i], &m[j]))?
                } else {
                    break_distance_matrix(&cell.breaks)?
                };
                distances.push((distance_name(b, s, p), d));
            }
        }
    }

    let mut degenerate = Vec::new();
    let mut affinities = Vec::new();
    for (name, d) in &distances {
        let a_name = affinity_name(name);
        let a = match affinity(d) {
            Ok(a) => a,
            Err(StructureError::DegenerateDistance) => {
                degenerate.push(a_name.clone());
                AffinityMatrix::uniform(tickers.clone())
            }
            Err(e) => return Err(e.into()),
        };
        affinities.push(a.with_name(a_name));
    }
    let find = |name: String| affinities.iter().find(|a| a.name() == name).expect("affinity");

    let mut inconsistencies = Vec::new();
    for p in Period::ALL {
        for s in Series::ALL {
            let e = find(affinity_name(&distance_name('E', s, p)));
            let b = find(affinity_name(&distance_name('B', s, p)));
            inconsistencies
                .push((format!("INC_behaviour_{}_{}", s.letter(), p.name()), behaviour_inconsistency(e, b)?));
        }
    }
    for b in ['E', 'B'] {
        for s in Series::ALL {
            let pre = find(affinity_name(&distance_name(b, s, Period::Pre)));
            let post = find(affinity_name(&distance_name(b, s, Period::Post)));
            inconsistencies.push((format!("INC_time_{b}{}", s.letter()), time_inconsistency(pre, post)?));
        }
    }

    let rankings = inconsistencies.iter().map(|(n, inc)| (n.clone(), anomaly_scores(inc))).collect();

    let mut dendrograms = Vec::new();
    for a in &affinities {
        dendrograms.push((a.name().to_string(), hcluster(ClusterInput::Affinity(a), cfg.linkage)?));
    }
    for (name, inc) in &inconsistencies {
        dendrograms.push((name.clone(), hcluster(ClusterInput::Inconsistency(inc), cfg.linkage)?));
    }

    Ok(StudyResults {
        tickers,
        exclusions,
        dropped_rows: BTreeMap::new(),
        cells,
        norm_series,
        thresholds,
        threshold_file,
        distances,
        affinities,
        degenerate,
        inconsistencies,
        rankings,
        dendrograms,
    })
}

/// Loads data, runs [`analyze`] and writes the bundle to `cfg.output_dir`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutcome, CliError> {
    cfg.validate()?;
    let cache_dir = cfg.resolved_cache_dir();
    let loaded = load_instruments(cfg, &cache_dir)?;
    let mut results = analyze(cfg, &loaded.series, loaded.exclusions, &cache_dir)?;
    results.dropped_rows = loaded.dropped_rows;
    let artifacts = write_bundle(cfg, &results, &cfg.output_dir)?;
    Ok(StudyOutcome { bundle_dir: cfg.output_dir.clone(), results, artifacts })
}

#[derive(Serialize)]
struct PanelInfo {
    name: String,
    start: String,
    end: String,
    dates: usize,
}

#[derive(Serialize)]
struct ThresholdInfo<'a> {
    cache_file: &'a str,
    t_max: usize,
    arl0: f64,
    burn_in: usize,
    replications: usize,
    rng_seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'static str,
    tool_version: &'static str,
    config: &'a StudyConfig,
    instruments: &'a [String],
    exclusions: &'a [Exclusion],
    dropped_rows: &'a BTreeMap<String, usize>,
    panels: Vec<PanelInfo>,
    thresholds: ThresholdInfo<'a>,
    degenerate_affinities: &'a [String],
    conventions: BTreeMap<&'static str, String>,
    artifacts: Vec<String>,
}

fn conventions(cfg: &StudyConfig) -> BTreeMap<&'static str, String> {
    let mut c = BTreeMap::new();
    c.insert("log_return", "ln(P_t / P_{t-1}), dated at the later observation".to_string());
    c.insert("parkinson_variance", "(ln H - ln L)^2 / (4 ln 2)".into());
    c.insert(
        "missing_data",
        "raw rows with a missing field (or zero volume when a volume column is configured) are dropped; \
         panels keep only dates present for every instrument"
            .into(),
    );
    c.insert("exclusion_policy", "instruments failing ingestion or lacking enough observations in any window are excluded and listed; fewer than 2 survivors abort".into());
    c.insert(
        "tail_restriction",
        format!(
            "returns: floor(q n) smallest and largest values, q = {}; variance: floor(q n) largest, q = {}; uniform weight q / count; ties kept in original order",
            cfg.tails.two_sided, cfg.tails.upper
        ),
    );
    c.insert("wasserstein", "integral of |Q_a - Q_b| over the unnormalized quantile functions".into());
    c.insert("restricted_mean", "conditional tail mean: sum(w x) / total mass".into());
    c.insert("break_index", "1-based index, in aligned panel days, of the last observation before the change".into());
    c.insert("detector_input", "raw series, no pre-transform".into());
    c.insert(
        "detector_restart",
        "after an alarm the break is the best split of the current window; monitoring restarts at the next observation"
            .into(),
    );
    c.insert(
        "thresholds",
        "Monte-Carlo conditional upper quantile over uniform null streams that have not alarmed earlier; lengths beyond t_max reuse h(t_max)".into(),
    );
    c.insert("empty_break_set_distance", format!("D(empty, empty) = 0; D(S, empty) = {EMPTY_SET_DISTANCE}"));
    c.insert("vector_norm", "Euclidean, sqrt(sum x^2)".into());
    c.insert("degenerate_affinity", "a distance matrix with no positive entry yields an all-ones affinity".into());
    c.insert("affinity_dissimilarity", "1 - A".into());
    c.insert("inconsistency_dissimilarity", "max(INC) - INC".into());
    c.insert("linkage_ties", "lowest cluster-id pair merges first".into());
    c.insert("anomaly_ties", "equal scores ordered by label".into());
    c.insert(
        "separation_height",
        "height at which a leaf first joins a cluster holding a strict majority of leaves".into(),
    );
    c.insert("norm_span", format!("{} to {}", cfg.windows.pre.start, cfg.windows.post.end));
    c
}

#[derive(Serialize)]
struct DendrogramDoc<'a> {
    #[serde(flatten)]
    dendrogram: &'a Dendrogram,
    separation_heights: BTreeMap<&'a str, f64>,
    root_split: [Vec<&'a str>; 2],
}

fn dendrogram_doc(d: &Dendrogram) -> Result<Vec<u8>, CliError> {
    let names = |ix: Vec<usize>| ix.into_iter().map(|i| d.labels[i].as_str()).collect::<Vec<_>>();
    let (small, large) = d.root_split();
    let doc = DendrogramDoc {
        dendrogram: d,
        separation_heights: d.labels.iter().map(String::as_str).zip(d.separation_heights()).collect(),
        root_split: [names(small), names(large)],
    };
    let mut out = serde_json::to_vec_pretty(&doc)?;
    out.push(b'\n');
    Ok(out)
}

fn ranking_text(r: &[(String, f64)]) -> Vec<u8> {
    let mut s = String::from("rank,label,score\n");
    for (i, (l, v)) in r.iter().enumerate() {
        let _ = writeln!(s, "{},{l},{v}", i + 1);
    }
    s.into_bytes()
}

fn histogram_text(cell: &Cell) -> Vec<u8> {
    let locs = cell.measures.iter().flat_map(|m| m.atoms().iter().map(|a| a.0));
    let (lo, hi) = locs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let bins = if hi > lo { HISTOGRAM_BINS } else { 1 };
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 0.0 };
    let mut s = String::from("ticker,bin_start,bin_end,mass\n");
    for (t, m) in cell.panel.tickers().iter().zip(&cell.measures) {
        let mut mass = vec![0.0; bins];
        for &(x, w) in m.atoms() {
            let b = if width > 0.0 { (((x - lo) / width) as usize).min(bins - 1) } else { 0 };
            mass[b] += w;
        }
        for (b, w) in mass.iter().enumerate() {
            let start = lo + width * b as f64;
            let end = if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 };
            let _ = writeln!(s, "{t},{start},{end},{w}");
        }
    }
    s.into_bytes()
}

/// Every bundle file keyed by its relative path.
fn bundle_files(cfg: &StudyConfig, r: &StudyResults) -> Result<BTreeMap<String, Vec<u8>>, CliError> {
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();

    for cell in &r.cells {
        let key = cell.key();
        let mut buf = Vec::new();
        write_panel(&cell.panel, &mut buf, ',')?;
        files.insert(format!("panels/{key}.csv"), buf);
        let lines: String = cell.breaks.iter().map(|b| b.to_line() + "\n").collect();
        files.insert(format!("breaks/{key}.txt"), lines.into_bytes());

        let mut atoms = String::from("ticker,location,weight\n");
        for (t, m) in cell.panel.tickers().iter().zip(&cell.measures) {
            for (x, w) in m.atoms() {
                let _ = writeln!(atoms, "{t},{x},{w}");
            }
        }
        files.insert(format!("tails/atoms/{key}.csv"), atoms.into_bytes());
        files.insert(format!("tails/histograms/{key}.csv"), histogram_text(cell));
    }

    for (s, norms) in &r.norm_series {
        files.insert(format!("norms/{}.csv", s.name()), norms.to_text("norm", ',').into_bytes());
    }

    let mut norms = String::from("matrix,frobenius\n");
    for (name, v) in r.matrix_norms() {
        let _ = writeln!(norms, "{name},{v}");
    }
    files.insert("matrix_norms.csv".into(), norms.into_bytes());

    for (name, d) in &r.distances {
        files.insert(format!("matrices/{name}.csv"), d.matrix().to_text(',').into_bytes());
    }
    for a in &r.affinities {
        files.insert(format!("affinities/{}.csv", a.name()), a.matrix().to_text(',').into_bytes());
    }
    for (name, inc) in &r.inconsistencies {
        let (left, right) = inc.provenance();
        let mut text = format!("# {left} - {right}\n");
        text.push_str(&inc.matrix().to_text(','));
        files.insert(format!("inconsistency/{name}.csv"), text.into_bytes());
    }
    for (name, ranking) in &r.rankings {
        files.insert(format!("anomaly/{name}.csv"), ranking_text(ranking.entries()));
        files.insert(format!("anomaly/{name}_top{TOP_K}.csv"), ranking_text(ranking.top(TOP_K)));
    }
    for (name, d) in &r.dendrograms {
        files.insert(format!("dendrograms/{name}.nwk"), (d.to_newick() + "\n").into_bytes());
        files.insert(format!("dendrograms/{name}.json"), dendrogram_doc(d)?);
    }

    let mut means = String::from("window,series,ticker,restricted_mean\n");
    let mut signs = String::from("window,series,negative,total,percent_negative\n");
    for cell in &r.cells {
        let values: Vec<f64> = cell.measures.iter().map(restricted_mean).collect();
        for (t, v) in cell.panel.tickers().iter().zip(&values) {
            let _ = writeln!(means, "{},{},{t},{v}", cell.period.name(), cell.series.name());
        }
        let negative = values.iter().filter(|v| **v < 0.0).count();
        let pct = 100.0 * negative as f64 / values.len() as f64;
        let _ = writeln!(signs, "{},{},{negative},{},{pct}", cell.period.name(), cell.series.name(), values.len());
    }
    files.insert("tails/restricted_means.csv".into(), means.into_bytes());
    files.insert("tails/restricted_mean_signs.csv".into(), signs.into_bytes());

    // Groups of the top split of each returns-extremity dendrogram, so the
    // restricted means can be compared across clusters.
    for p in Period::ALL {
        let name = affinity_name(&distance_name('E', Series::Returns, p));
        let den = r.dendrogram(&name).expect("dendrogram");
        let cell = r.cell(p, Series::Returns);
        let (small, large) = den.root_split();
        let mut text = String::from("cluster,ticker,restricted_mean\n");
        for (cluster, members) in [small, large].iter().enumerate() {
            for &i in members {
                let _ = writeln!(text, "{cluster},{},{}", den.labels[i], restricted_mean(&cell.measures[i]));
            }
        }
        files.insert(format!("tails/cluster_means_{}.csv", p.name()), text.into_bytes());
    }

    files.insert("detector/thresholds.txt".into(), r.thresholds.to_text().into_bytes());

    let panels = r
        .cells
        .iter()
        .map(|c| PanelInfo {
            name: c.key(),
            start: c.panel.dates().first().map(|d| d.to_string()).unwrap_or_default(),
            end: c.panel.dates().last().map(|d| d.to_string()).unwrap_or_default(),
            dates: c.panel.n_dates(),
        })
        .collect();
    let manifest = Manifest {
        format: "tailbreak-bundle/1",
        tool_version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        instruments: &r.tickers,
        exclusions: &r.exclusions,
        dropped_rows: &r.dropped_rows,
        panels,
        thresholds: ThresholdInfo {
            cache_file: &r.threshold_file,
            t_max: r.thresholds.t_max(),
            arl0: r.thresholds.arl0(),
            burn_in: r.thresholds.burn_in(),
            replications: r.thresholds.replications(),
            rng_seed: r.thresholds.seed(),
        },
        degenerate_affinities: &r.degenerate,
        conventions: conventions(cfg),
        artifacts: files.keys().cloned().collect(),
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    files.insert("manifest.json".into(), text);
    Ok(files)
}

/// Writes the bundle under `dir` and returns the relative paths written.
pub fn write_bundle(cfg: &StudyConfig, results: &StudyResults, dir: &Path) -> Result<Vec<String>, CliError> {
    let files = bundle_files(cfg, results)?;
    for (rel, bytes) in &files {
        let path = dir.join(rel);
        let parent = path.parent().expect("bundle paths have a parent");
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(files.into_keys().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_cover_every_combination() {
        let d = distance_names();
        assert_eq!(d.len(), 8);
        assert_eq!(d[0], "D_ER_pre");
        assert_eq!(d[3], "D_BV_pre");
        assert_eq!(d[7], "D_BV_post");
        assert_eq!(affinity_name("D_EV_post"), "A_EV_post");
        let inc = inconsistency_names();
        assert_eq!(inc.len(), 8);
        assert_eq!(inc[0], "INC_behaviour_R_pre");
        assert_eq!(inc[7], "INC_time_BV");
    }
}
