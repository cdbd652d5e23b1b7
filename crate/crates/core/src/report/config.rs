use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};

use super::AppError;
use crate::ingest::DateWindow;
use crate::summarize::SummaryParams;
use crate::topics::ClusterAlgorithm;

/// Keys accepted in config files; each mirrors the `--key` flag.
pub const CONFIG_KEYS: [&str; 23] = [
    "dump",
    "store",
    "tag",
    "from",
    "to",
    "embedder",
    "endpoint",
    "dim",
    "seed",
    "reduce-dim",
    "cluster",
    "k",
    "eps",
    "min-pts",
    "questions-per-topic",
    "pool-size",
    "sentences-question",
    "sentences-answer",
    "sentences-digest",
    "score-min",
    "out",
    "format",
    "batch-size",
];

/// Seed salt for the clustering stage (ASCII "cluster!").
pub const CLUSTER_SEED_SALT: u64 = 0x636c_7573_7465_7221;
/// Seed salt for the summarization stage (ASCII "summary!").
pub const SUMMARY_SEED_SALT: u64 = 0x7375_6d6d_6172_7921;

pub const DEFAULT_BUILTIN_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedderKind {
    Builtin,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Markdown,
    Csv,
    Json,
}

impl OutputFormat {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "md" | "markdown" => Some(Self::Markdown),
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Markdown => "md",
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dump: Option<PathBuf>,
    store: Option<PathBuf>,
    pub tag: String,
    pub window: DateWindow,
    pub embedder: EmbedderKind,
    pub endpoint: Option<String>,
    /// Builtin: output dimension. HTTP: expected dimension, if given.
    pub dim: Option<usize>,
    pub seed: u64,
    pub reduce_dim: usize,
    pub cluster: ClusterAlgorithm,
    pub k: Option<usize>,
    pub eps: f64,
    pub min_pts: usize,
    pub summary: SummaryParams,
    pub out: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub batch_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dump: None,
            store: None,
            tag: "android".into(),
            window: DateWindow::default(),
            embedder: EmbedderKind::Builtin,
            endpoint: None,
            dim: None,
            seed: 42,
            reduce_dim: 5,
            cluster: ClusterAlgorithm::Dbscan,
            k: None,
            eps: 0.5,
            min_pts: 5,
            summary: SummaryParams::default(),
            out: PathBuf::from("out"),
            formats: vec![OutputFormat::Markdown, OutputFormat::Csv, OutputFormat::Json],
            batch_size: crate::embed::DEFAULT_BATCH_SIZE,
        }
    }
}

impl PipelineConfig {
    /// Builds a config from `key = value` settings layered in order: later
    /// layers override earlier ones.
    pub fn from_layers(layers: &[BTreeMap<String, String>]) -> Result<Self, AppError> {
        let mut merged = BTreeMap::new();
        for layer in layers {
            for (k, v) in layer {
                merged.insert(k.clone(), v.clone());
            }
        }
        Self::from_pairs(&merged)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, AppError> {
        let mut cfg = Self::default();
        for (key, value) in pairs {
            let value = value.trim();
            match key.as_str() {
                "dump" => cfg.dump = Some(PathBuf::from(value)),
                "store" => cfg.store = Some(PathBuf::from(value)),
                "tag" => {
                    if value.is_empty() {
                        return Err(AppError::Config("tag must not be empty".into()));
                    }
                    cfg.tag = value.to_lowercase();
                }
                "from" => cfg.window.from = parse_date(key, value)?,
                "to" => cfg.window.to = parse_date(key, value)?,
                "embedder" => {
                    cfg.embedder = match value {
                        "builtin" => EmbedderKind::Builtin,
                        "http" => EmbedderKind::Http,
                        _ => return Err(bad(key, value, "expected builtin or http")),
                    }
                }
                "endpoint" => cfg.endpoint = Some(value.to_string()),
                "dim" => cfg.dim = Some(parse_num(key, value)?),
                "seed" => cfg.seed = parse_num(key, value)?,
                "reduce-dim" => cfg.reduce_dim = parse_num(key, value)?,
                "cluster" => {
                    cfg.cluster = match value {
                        "kmeans" => ClusterAlgorithm::KMeans,
                        "dbscan" => ClusterAlgorithm::Dbscan,
                        _ => return Err(bad(key, value, "expected kmeans or dbscan")),
                    }
                }
                "k" => cfg.k = Some(parse_num(key, value)?),
                "eps" => cfg.eps = parse_num(key, value)?,
                "min-pts" => cfg.min_pts = parse_num(key, value)?,
                "questions-per-topic" => cfg.summary.questions_per_topic = parse_num(key, value)?,
                "pool-size" => cfg.summary.pool_size = parse_num(key, value)?,
                "sentences-question" => cfg.summary.sentences_question = parse_num(key, value)?,
                "sentences-answer" => cfg.summary.sentences_answer = parse_num(key, value)?,
                "sentences-digest" => cfg.summary.sentences_digest = parse_num(key, value)?,
                "score-min" => cfg.summary.score_min = parse_num(key, value)?,
                "out" => cfg.out = PathBuf::from(value),
                "format" => {
                    let mut formats = Vec::new();
                    for part in value.split(',').filter(|p| !p.trim().is_empty()) {
                        let f = OutputFormat::parse(part).ok_or_else(|| bad(key, part, "expected md, csv or json"))?;
                        if !formats.contains(&f) {
                            formats.push(f);
                        }
                    }
                    formats.sort();
                    cfg.formats = formats;
                }
                "batch-size" => cfg.batch_size = parse_num(key, value)?,
                other => return Err(AppError::Config(format!("unknown setting {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), AppError> {
        if self.window.from >= self.window.to {
            return Err(AppError::Config(format!(
                "--from ({}) must be before --to ({})",
                self.window.from, self.window.to
            )));
        }
        if self.embedder == EmbedderKind::Http && self.endpoint.is_none() {
            return Err(AppError::Config("--embedder http needs --endpoint".into()));
        }
        if self.embedder == EmbedderKind::Builtin && self.dim.is_some_and(|d| d < 8) {
            return Err(AppError::Config("--dim must be at least 8".into()));
        }
        if self.dim == Some(0) {
            return Err(AppError::Config("--dim must be positive".into()));
        }
        if self.reduce_dim < 2 {
            return Err(AppError::Config("--reduce-dim must be at least 2".into()));
        }
        if self.k == Some(0) {
            return Err(AppError::Config("--k must be positive".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(AppError::Config("--eps must be a positive number".into()));
        }
        if self.min_pts < 2 {
            return Err(AppError::Config("--min-pts must be at least 2".into()));
        }
        let s = &self.summary;
        for (name, v) in [
            ("--questions-per-topic", s.questions_per_topic),
            ("--pool-size", s.pool_size),
            ("--sentences-question", s.sentences_question),
            ("--sentences-answer", s.sentences_answer),
            ("--sentences-digest", s.sentences_digest),
            ("--batch-size", self.batch_size),
        ] {
            if v == 0 {
                return Err(AppError::Config(format!("{name} must be positive")));
            }
        }
        if self.formats.is_empty() {
            return Err(AppError::Config("--format needs at least one of md, csv, json".into()));
        }
        Ok(())
    }

    pub fn store_path(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| self.out.join("store.ndjson"))
    }

    pub fn cache_path(&self) -> PathBuf {
        self.out.join("embeddings.cache")
    }

    pub fn topics_path(&self) -> PathBuf {
        self.out.join("topics.json")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out.join("manifest.json")
    }

    pub fn builtin_dim(&self) -> usize {
        self.dim.unwrap_or(DEFAULT_BUILTIN_DIM)
    }

    pub fn cluster_seed(&self) -> u64 {
        self.seed ^ CLUSTER_SEED_SALT
    }

    pub fn summary_seed(&self) -> u64 {
        self.seed ^ SUMMARY_SEED_SALT
    }

    /// Every setting as `key = value`, for manifests and fingerprints.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("dump", self.dump.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put("store", self.store_path().display().to_string());
        put("tag", self.tag.clone());
        put("from", self.window.from.to_rfc3339());
        put("to", self.window.to.to_rfc3339());
        put(
            "embedder",
            match self.embedder {
                EmbedderKind::Builtin => "builtin".into(),
                EmbedderKind::Http => "http".into(),
            },
        );
        put("endpoint", self.endpoint.clone().unwrap_or_default());
        put("dim", self.dim.map(|d| d.to_string()).unwrap_or_default());
        put("seed", self.seed.to_string());
        put("reduce-dim", self.reduce_dim.to_string());
        put("cluster", self.cluster.as_str().into());
        put("k", self.k.map(|k| k.to_string()).unwrap_or_default());
        put("eps", self.eps.to_string());
        put("min-pts", self.min_pts.to_string());
        put("questions-per-topic", self.summary.questions_per_topic.to_string());
        put("pool-size", self.summary.pool_size.to_string());
        put("sentences-question", self.summary.sentences_question.to_string());
        put("sentences-answer", self.summary.sentences_answer.to_string());
        put("sentences-digest", self.summary.sentences_digest.to_string());
        put("score-min", self.summary.score_min.to_string());
        put("out", self.out.display().to_string());
        put(
            "format",
            self.formats.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(","),
        );
        put("batch-size", self.batch_size.to_string());
        m
    }
}

/// Reads a flat `key = value` file; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, AppError> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| AppError::Config(format!("config line {}: expected key = value", idx + 1)))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(AppError::Config(format!("config line {}: unknown key {key:?}", idx + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn bad(key: &str, value: &str, why: &str) -> AppError {
    AppError::Config(format!("--{key} {value:?}: {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, AppError> {
    value.parse().map_err(|_| bad(key, value, "not a valid number"))
}

fn parse_date(key: &str, value: &str) -> Result<DateTime<Utc>, AppError> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Ok(dt.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| bad(key, value, "expected YYYY-MM-DD or an RFC 3339 timestamp"))
}
