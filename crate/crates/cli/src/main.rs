use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tailbreak::config::{Window, CACHE_DIR_ENV};
use tailbreak::fetch::Fetcher;
use tailbreak::study::{fetch_range, Series};
use tailbreak::{report, run_study, CliError, StudyConfig};
use tailbreak_core::changepoints::{calibrate_thresholds_cached, sequential_detect};
use tailbreak_core::market_data::{
    log_returns, parkinson_variance, parse_ohlc, read_panel, write_value_series, OhlcSchema,
};
use tailbreak_core::setdist::break_distance_matrix;
use tailbreak_core::tails::extremity_distance_matrix;
use tailbreak_core::{BreakSet, DetectorConfig, Linkage, SeriesKind};

#[derive(Parser)]
#[command(name = "tailbreak", version, about = "Tail extremity and structural-break analysis of asset panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download OHLC histories into the cache.
    Fetch(FetchArgs),
    /// Log returns or Parkinson variance of one OHLC file.
    Derive(DeriveArgs),
    /// Sequential change-point detection on every row of a panel.
    Breaks(BreaksArgs),
    /// Extremity or break distance matrix of a panel.
    Matrices(MatricesArgs),
    /// Run the full study and write the artifact bundle.
    Study(StudyArgs),
    /// Markdown summary of a finished bundle.
    Report(ReportArgs),
}

#[derive(Args)]
struct FetchArgs {
    /// Study config supplying endpoint, tickers, schema and windows.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesArg {
    Returns,
    Variance,
}

impl SeriesArg {
    fn series(self) -> Series {
        match self {
            SeriesArg::Returns => Series::Returns,
            SeriesArg::Variance => Series::Variance,
        }
    }
}

#[derive(Args)]
struct DeriveArgs {
    /// OHLC file (canonical `date,close,high,low` unless --schema is given).
    input: PathBuf,
    #[arg(long, value_enum, default_value = "returns")]
    kind: SeriesArg,
    /// TOML file describing the column layout.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    ticker: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DetectorArgs {
    #[arg(long, default_value_t = DetectorConfig::default().arl0)]
    arl0: f64,
    #[arg(long, default_value_t = DetectorConfig::default().burn_in)]
    burn_in: usize,
    #[arg(long, default_value_t = DetectorConfig::default().mc_replications)]
    replications: usize,
    #[arg(long, default_value_t = DetectorConfig::default().rng_seed)]
    seed: u64,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl DetectorArgs {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            arl0: self.arl0,
            burn_in: self.burn_in,
            mc_replications: self.replications,
            rng_seed: self.seed,
        }
    }

    fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".tailbreak-cache"))
    }
}

#[derive(Args)]
struct BreaksArgs {
    /// Panel file as written by the study (`date,<ticker>...`).
    panel: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Behaviour {
    Extremity,
    Breaks,
}

#[derive(Args)]
struct MatricesArgs {
    /// Panel file (for `extremity`) or break-set file (for `breaks`).
    input: PathBuf,
    #[arg(long, value_enum)]
    behaviour: Behaviour,
    /// Series in the panel; picks the tail rule.
    #[arg(long, value_enum, default_value = "returns")]
    kind: SeriesArg,
    /// Tail fraction; defaults to the rule's usual value.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    pre_start: Option<NaiveDate>,
    #[arg(long)]
    pre_end: Option<NaiveDate>,
    #[arg(long)]
    post_start: Option<NaiveDate>,
    #[arg(long)]
    post_end: Option<NaiveDate>,
    #[arg(long)]
    arl0: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, value_enum)]
    linkage: Option<LinkageArg>,
    /// Also write the markdown report to `<output_dir>/report.md`.
    #[arg(long)]
    report: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkageArg {
    Average,
    Single,
    Complete,
}

#[derive(Args)]
struct ReportArgs {
    bundle: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}

fn fetch(args: FetchArgs) -> Result<(), CliError> {
    let mut cfg = StudyConfig::load(&args.config)?;
    if args.cache_dir.is_some() {
        cfg.cache_dir = args.cache_dir;
    }
    let Some(endpoint) = cfg.data.endpoint.clone() else {
        return Err(CliError::Config("fetch needs data.endpoint in the config".into()));
    };
    let fetcher = Fetcher::new(endpoint, cfg.schema.clone(), cfg.data.fetch.clone(), cfg.resolved_cache_dir());
    let (start, end) = fetch_range(&cfg);
    let mut failed = None;
    for t in &cfg.data.tickers {
        match fetcher.fetch(t, start, end) {
            Ok(got) => {
                let how = if got.from_cache { "cached" } else { "downloaded" };
                println!("{t}\t{how}\t{}\t{}", got.series.len(), got.path.display());
            }
            Err(e) => {
                eprintln!("{t}\tfailed\t{e}");
                failed.get_or_insert(e);
            }
        }
    }
    failed.map_or(Ok(()), Err)
}

fn derive(args: DeriveArgs) -> Result<(), CliError> {
    let schema = match &args.schema {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str::<OhlcSchema>(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => OhlcSchema::default(),
    };
    let ticker = args.ticker.clone().unwrap_or_else(|| {
        args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "series".into())
    });
    let ohlc = parse_ohlc(open(&args.input)?, &ticker, &schema)?;
    let series = match args.kind.series() {
        Series::Returns => log_returns(&ohlc)?,
        Series::Variance => parkinson_variance(&ohlc),
    };
    let mut buf = Vec::new();
    write_value_series(&series, &mut buf, ',')?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&buf))
}

fn breaks(args: BreaksArgs) -> Result<(), CliError> {
    let panel = read_panel(open(&args.panel)?, SeriesKind::Other, ',')?;
    let cfg = args.detector.config();
    cfg.validate()?;
    let t_max = panel.n_dates().max(cfg.burn_in + 1);
    let (table, _) = calibrate_thresholds_cached(&cfg, t_max, &args.detector.cache_dir().join("thresholds"))?;
    let text: String = panel
        .tickers()
        .iter()
        .zip(panel.rows())
        .map(|(t, row)| sequential_detect(t, row, &table).to_line() + "\n")
        .collect();
    emit(args.output.as_deref(), &text)
}

fn matrices(args: MatricesArgs) -> Result<(), CliError> {
    let d = match args.behaviour {
        Behaviour::Extremity => {
            let tail = args.kind.series().tail();
            let panel = read_panel(open(&args.input)?, SeriesKind::Other, ',')?;
            extremity_distance_matrix(&panel, tail, args.fraction.unwrap_or(tail.default_fraction()))?
        }
        Behaviour::Breaks => {
            let text = fs::read_to_string(&args.input).map_err(|e| CliError::io(&args.input, e))?;
            let sets = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(BreakSet::from_line)
                .collect::<Result<Vec<_>, _>>()?;
            break_distance_matrix(&sets)?
        }
    };
    emit(args.output.as_deref(), &d.matrix().to_text(','))
}

fn study(args: StudyArgs) -> Result<(), CliError> {
    let mut cfg = StudyConfig::load(&args.config)?;
    if let Some(d) = args.output_dir {
        cfg.output_dir = d;
    }
    if args.cache_dir.is_some() {
        cfg.cache_dir = args.cache_dir;
    }
    if let Some(d) = args.data_dir {
        cfg.data.dir = Some(d);
        cfg.data.endpoint = None;
    }
    let w = &mut cfg.windows;
    let set = |win: &mut Window, start: Option<NaiveDate>, end: Option<NaiveDate>| {
        win.start = start.unwrap_or(win.start);
        win.end = end.unwrap_or(win.end);
    };
    set(&mut w.pre, args.pre_start, args.pre_end);
    set(&mut w.post, args.post_start, args.post_end);
    if let Some(a) = args.arl0 {
        cfg.detector.arl0 = a;
    }
    if let Some(r) = args.replications {
        cfg.detector.mc_replications = r;
    }
    if let Some(l) = args.linkage {
        cfg.linkage = match l {
            LinkageArg::Average => Linkage::Average,
            LinkageArg::Single => Linkage::Single,
            LinkageArg::Complete => Linkage::Complete,
        };
    }
    let outcome = run_study(&cfg)?;
    let r = &outcome.results;
    println!("instruments: {}", r.tickers.join(", "));
    for e in &r.exclusions {
        println!("excluded: {} ({}): {}", e.ticker, e.stage, e.reason);
    }
    println!("bundle: {} ({} files)", outcome.bundle_dir.display(), outcome.artifacts.len());
    if args.report {
        let path = outcome.bundle_dir.join("report.md");
        emit(Some(&path), &report::render(&outcome.bundle_dir)?)?;
        println!("report: {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fetch(a) => fetch(a),
        Command::Derive(a) => derive(a),
        Command::Breaks(a) => breaks(a),
        Command::Matrices(a) => matrices(a),
        Command::Study(a) => study(a),
        Command::Report(a) => report::render(&a.bundle).and_then(|t| emit(a.output.as_deref(), &t)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "category": e.category(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
