//! Declarative study configuration (TOML).

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use tailbreak_core::market_data::{OhlcSchema, POST_WINDOW, PRE_WINDOW};
use tailbreak_core::tails::{DEFAULT_TWO_SIDED_FRACTION, DEFAULT_UPPER_FRACTION};
use tailbreak_core::{DetectorConfig, Linkage};

use crate::CliError;

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "TAILBREAK_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub data: DataSource,
    #[serde(default)]
    pub schema: OhlcSchema,
    #[serde(default)]
    pub windows: Windows,
    #[serde(default)]
    pub tails: TailFractions,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub linkage: Linkage,
    pub output_dir: PathBuf,
    /// Falls back to `$TAILBREAK_CACHE_DIR`, then `.tailbreak-cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

/// Either a directory of OHLC files or a remote endpoint template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// File name inside `dir`; `{ticker}` is substituted.
    #[serde(default = "default_file_pattern")]
    pub file_pattern: String,
    /// URL with `{ticker}`, `{start}` and `{end}` placeholders.
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Required for endpoints. For directories, empty means every file
    /// matching `file_pattern`, in name order.
    #[serde(default)]
    pub tickers: Vec<String>,
    #[serde(default)]
    pub fetch: FetchPolicy,
}

fn default_file_pattern() -> String {
    "{ticker}.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchPolicy {
    pub requests_per_second: f64,
    pub attempts: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self { requests_per_second: 1.0, attempts: 3, backoff_ms: 500, timeout_secs: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Windows {
    pub pre: Window,
    pub post: Window,
}

impl Default for Windows {
    fn default() -> Self {
        Self {
            pre: Window { start: PRE_WINDOW.0, end: PRE_WINDOW.1 },
            post: Window { start: POST_WINDOW.0, end: POST_WINDOW.1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailFractions {
    pub two_sided: f64,
    pub upper: f64,
}

impl Default for TailFractions {
    fn default() -> Self {
        Self { two_sided: DEFAULT_TWO_SIDED_FRACTION, upper: DEFAULT_UPPER_FRACTION }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = self.data.dir.as_mut() {
            join(d);
        }
        join(&mut self.output_dir);
        if let Some(c) = self.cache_dir.as_mut() {
            join(c);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (&self.data.dir, &self.data.endpoint) {
            (Some(_), Some(_)) => return bad("data: set either `dir` or `endpoint`, not both".into()),
            (None, None) => return bad("data: one of `dir` or `endpoint` is required".into()),
            (None, Some(url)) => {
                if !url.contains("{ticker}") {
                    return bad("data.endpoint must contain a {ticker} placeholder".into());
                }
                if self.data.tickers.is_empty() {
                    return bad("data.tickers is required with an endpoint".into());
                }
            }
            (Some(_), None) => {
                if !self.data.file_pattern.contains("{ticker}") {
                    return bad("data.file_pattern must contain a {ticker} placeholder".into());
                }
            }
        }
        let f = &self.data.fetch;
        if f.requests_per_second.is_nan() || f.requests_per_second <= 0.0 || f.attempts == 0 {
            return bad("data.fetch: requests_per_second must be positive and attempts at least 1".into());
        }
        let w = &self.windows;
        for (name, win) in [("pre", w.pre), ("post", w.post)] {
            if win.start > win.end {
                return bad(format!("windows.{name}: start {} is after end {}", win.start, win.end));
            }
        }
        if w.pre.end >= w.post.start {
            return bad(format!("windows overlap: pre ends {} but post starts {}", w.pre.end, w.post.start));
        }
        for (name, q) in [("two_sided", self.tails.two_sided), ("upper", self.tails.upper)] {
            if !(q > 0.0 && q < 0.5) {
                return bad(format!("tails.{name} = {q} outside (0, 0.5)"));
            }
        }
        self.detector.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Cache directory after applying the environment override.
    pub fn resolved_cache_dir(&self) -> PathBuf {
        if let Some(d) = std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(d);
        }
        self.cache_dir.clone().unwrap_or_else(|| PathBuf::from(".tailbreak-cache"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "output_dir = \"out\"\n[data]\ndir = \"d\"\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = StudyConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.windows, Windows::default());
        assert_eq!(cfg.tails.two_sided, 0.05);
        assert_eq!(cfg.tails.upper, 0.10);
        assert_eq!(cfg.detector, DetectorConfig::default());
        assert_eq!(cfg.linkage, Linkage::Average);
        assert_eq!(cfg.data.file_pattern, "{ticker}.csv");
    }

    #[test]
    fn rejects_bad_settings() {
        let cases = [
            "output_dir = \"o\"\n[data]\n",
            "output_dir = \"o\"\n[data]\ndir = \"d\"\nendpoint = \"http://x/{ticker}\"\n",
            "output_dir = \"o\"\n[data]\nendpoint = \"http://x/{ticker}\"\n",
            "output_dir = \"o\"\n[data]\ndir = \"d\"\n[tails]\nupper = 0.5\n",
            "output_dir = \"o\"\n[data]\ndir = \"d\"\n[detector]\narl0 = 10.0\n",
            "output_dir = \"o\"\n[data]\ndir = \"d\"\n[windows]\npre = { start = \"2020-01-01\", end = \"2020-02-01\" }\npost = { start = \"2020-01-15\", end = \"2020-03-01\" }\n",
            "output_dir = \"o\"\nbogus = 1\n[data]\ndir = \"d\"\n",
        ];
        for text in cases {
            assert!(matches!(StudyConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn rebase_resolves_relative_paths() {
        let mut cfg = StudyConfig::from_toml(MINIMAL).unwrap();
        cfg.rebase(Path::new("/base"));
        assert_eq!(cfg.data.dir.as_deref(), Some(Path::new("/base/d")));
        assert_eq!(cfg.output_dir, PathBuf::from("/base/out"));
    }
}
