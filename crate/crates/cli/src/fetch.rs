//! Remote OHLC download with an on-disk cache.
//!
//! Files are cached under `<cache>/ohlc/<ticker>_<start>_<end>.csv` in the
//! canonical `date,close,high,low` form. A cache hit never touches the
//! network. Requests from one [`Fetcher`] are serialized and spaced by the
//! configured rate limit; transport failures, 429 and 5xx answers are retried
//! with exponential backoff.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use tailbreak_core::market_data::{parse_ohlc, write_ohlc, OhlcSchema};
use tailbreak_core::OhlcSeries;

use crate::config::FetchPolicy;
use crate::CliError;

#[derive(Debug)]
pub struct Fetched {
    pub path: PathBuf,
    pub series: OhlcSeries,
    pub from_cache: bool,
}

pub struct Fetcher {
    agent: ureq::Agent,
    endpoint: String,
    schema: OhlcSchema,
    policy: FetchPolicy,
    cache_dir: PathBuf,
    /// Time of the last request; the lock also serializes requests.
    last_request: Mutex<Option<Instant>>,
    requests: AtomicUsize,
}

impl Fetcher {
    pub fn new(
        endpoint: impl Into<String>,
        schema: OhlcSchema,
        policy: FetchPolicy,
        cache_dir: impl Into<PathBuf>,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(policy.timeout_secs.max(1))))
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            schema,
            policy,
            cache_dir: cache_dir.into(),
            last_request: Mutex::new(None),
            requests: AtomicUsize::new(0),
        }
    }

    /// Network requests issued so far, retries included.
    pub fn network_requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn cache_path(&self, ticker: &str, start: NaiveDate, end: NaiveDate) -> PathBuf {
        cache_path(&self.cache_dir, ticker, start, end)
    }

    pub fn url(&self, ticker: &str, start: NaiveDate, end: NaiveDate) -> String {
        self.endpoint
            .replace("{ticker}", ticker)
            .replace("{start}", &start.to_string())
            .replace("{end}", &end.to_string())
    }

    pub fn fetch(&self, ticker: &str, start: NaiveDate, end: NaiveDate) -> Result<Fetched, CliError> {
        let path = self.cache_path(ticker, start, end);
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(series) = parse_ohlc(&bytes[..], ticker, &OhlcSchema::default()) {
                return Ok(Fetched { path, series, from_cache: true });
            }
        }
        let body = self.download(ticker, &self.url(ticker, start, end))?;
        let series = parse_ohlc(body.as_bytes(), ticker, &self.schema)?;
        let mut canonical = Vec::new();
        write_ohlc(&series, &mut canonical)?;
        write_atomically(&path, &canonical)?;
        Ok(Fetched { path, series, from_cache: false })
    }

    fn download(&self, ticker: &str, url: &str) -> Result<String, CliError> {
        let mut delay = Duration::from_millis(self.policy.backoff_ms);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let err = match self.request(ticker, url) {
                Ok(body) => return Ok(body),
                Err(e) if !e.is_retriable() => return Err(e),
                Err(e) => e,
            };
            if attempt >= self.policy.attempts {
                return Err(CliError::Transport { ticker: ticker.into(), attempts: attempt, message: err.to_string() });
            }
            thread::sleep(delay);
            delay = delay.saturating_mul(2);
        }
    }

    fn request(&self, ticker: &str, url: &str) -> Result<String, CliError> {
        let mut last = self.last_request.lock().expect("rate limiter poisoned");
        let spacing = Duration::from_secs_f64(1.0 / self.policy.requests_per_second);
        if let Some(prev) = *last {
            let wait = spacing.saturating_sub(prev.elapsed());
            thread::sleep(wait);
        }
        *last = Some(Instant::now());
        self.requests.fetch_add(1, Ordering::Relaxed);
        let transport =
            |e: ureq::Error| CliError::Transport { ticker: ticker.into(), attempts: 1, message: e.to_string() };
        let mut resp = self.agent.get(url).call().map_err(transport)?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(CliError::Http { ticker: ticker.into(), status });
        }
        resp.body_mut().read_to_string().map_err(transport)
    }
}

pub fn cache_path(cache_dir: &Path, ticker: &str, start: NaiveDate, end: NaiveDate) -> PathBuf {
    let safe: String =
        ticker.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect();
    cache_dir.join("ohlc").join(format!("{safe}_{start}_{end}.csv"))
}

/// One-shot convenience wrapper around [`Fetcher::fetch`].
pub fn fetch_ohlc(
    endpoint: &str,
    ticker: &str,
    start: NaiveDate,
    end: NaiveDate,
    cache_dir: &Path,
    policy: &FetchPolicy,
    schema: &OhlcSchema,
) -> Result<Fetched, CliError> {
    Fetcher::new(endpoint, schema.clone(), policy.clone(), cache_dir).fetch(ticker, start, end)
}

pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    static WRITES: AtomicUsize = AtomicUsize::new(0);
    let n = WRITES.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_extension(format!("tmp-{}-{n}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}
