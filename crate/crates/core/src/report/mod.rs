//! Pipeline orchestration: configuration, the ingest/topics/summarize
//! stages, the run manifest and the emitted reports.

mod config;
mod emit;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    parse_config_text, read_config_file, EmbedderKind, OutputFormat, PipelineConfig, CLUSTER_SEED_SALT, CONFIG_KEYS,
    DEFAULT_BUILTIN_DIM, SUMMARY_SEED_SALT,
};
pub use emit::{emit_report, emit_summary_table, emit_topics_table};

use crate::embed::{BuiltinEmbedder, CachedEmbedder, EmbeddingCache, EmbeddingProvider, HttpEmbedder, RetryPolicy, TextEmbedder};
use crate::ingest::{filter_posts, load_store, save_store, DumpReader, ParseMode, PostStore};
use crate::preprocess::{preprocess_post, CleanDocument};
use crate::summarize::{build_topic_report, TopicMembers, TopicReportRecord};
use crate::topics::{
    build_topics, compute_ctfidf, dbscan, default_k, fit_reduction, kmeans, ClusterAlgorithm, TopicModelArtifact,
};
use crate::util::{file_sha256, hex, sha256, write_bytes_atomically};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("pipeline error: {0}")]
    Pipeline(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Input(_) => 3,
            AppError::Pipeline(_) => 4,
        }
    }
}

fn pipeline<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> AppError + '_ {
    move |e| AppError::Pipeline(format!("{context}: {e}"))
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> AppError + '_ {
    move |e| AppError::Input(format!("{context}: {e}"))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the stage's inputs and settings.
    pub fingerprint: String,
    pub seconds: f64,
    /// Reused from an earlier run instead of recomputed.
    pub reused: bool,
    pub outputs: Vec<String>,
    pub counts: BTreeMap<String, u64>,
}

/// `manifest.json`: what was run, on what, with which settings, and what it
/// produced. Updated after every stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    /// Input name to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
    /// Artifact path to SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Option<Self> {
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn save(&self, path: &Path) -> Result<(), AppError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_bytes_atomically(path, text.as_bytes()).map_err(pipeline("writing manifest"))
    }

    /// Whether `stage` ran with `fingerprint` and its outputs are unchanged.
    fn is_current(&self, stage: &str, fingerprint: &str) -> bool {
        let Some(record) = self.stages.get(stage) else {
            return false;
        };
        record.fingerprint == fingerprint
            && record.outputs.iter().all(|out| {
                let recorded = self.artifacts.get(out);
                recorded.is_some() && file_sha256(Path::new(out)).ok().as_ref() == recorded
            })
    }
}

fn fingerprint(stage: &str, cfg: &PipelineConfig, keys: &[&str], inputs: &[&str]) -> String {
    let snapshot = cfg.snapshot();
    let mut text = format!("stage={stage}\n");
    for k in keys {
        text.push_str(&format!("{k}={}\n", snapshot.get(*k).map(String::as_str).unwrap_or("")));
    }
    for i in inputs {
        text.push_str(&format!("input={i}\n"));
    }
    hex(&sha256(text.as_bytes()))
}

const INGEST_KEYS: [&str; 3] = ["tag", "from", "to"];
const EMBED_KEYS: [&str; 4] = ["embedder", "endpoint", "dim", "seed"];
const TOPIC_KEYS: [&str; 6] = ["reduce-dim", "cluster", "k", "eps", "min-pts", "format"];
const SUMMARY_KEYS: [&str; 7] = [
    "questions-per-topic",
    "pool-size",
    "sentences-question",
    "sentences-answer",
    "sentences-digest",
    "score-min",
    "format",
];

struct StageRun<'a> {
    cfg: &'a PipelineConfig,
    manifest: RunManifest,
    started: Instant,
}

impl<'a> StageRun<'a> {
    fn begin(cfg: &'a PipelineConfig) -> Self {
        let mut manifest = RunManifest::load(&cfg.manifest_path()).unwrap_or_default();
        manifest.config = cfg.snapshot();
        Self {
            cfg,
            manifest,
            started: Instant::now(),
        }
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> Result<(), AppError> {
        write_bytes_atomically(path, bytes).map_err(pipeline(&format!("writing {}", path.display())))
    }

    fn finish(
        mut self,
        stage: &str,
        fingerprint: String,
        outputs: Vec<PathBuf>,
        counts: BTreeMap<String, u64>,
    ) -> Result<StageRecord, AppError> {
        let mut names = Vec::new();
        for out in &outputs {
            let name = out.display().to_string();
            let hash = file_sha256(out).map_err(pipeline(&format!("hashing {name}")))?;
            self.manifest.artifacts.insert(name.clone(), hash);
            names.push(name);
        }
        let record = StageRecord {
            fingerprint,
            seconds: self.started.elapsed().as_secs_f64(),
            reused: false,
            outputs: names,
            counts,
        };
        self.manifest.stages.insert(stage.to_string(), record.clone());
        self.manifest.save(&self.cfg.manifest_path())?;
        Ok(record)
    }
}

fn create_out_dir(cfg: &PipelineConfig) -> Result<(), AppError> {
    std::fs::create_dir_all(&cfg.out).map_err(pipeline(&format!("creating {}", cfg.out.display())))
}

fn hash_input(path: &Path, what: &str) -> Result<String, AppError> {
    if !path.is_file() {
        return Err(AppError::Input(format!("{what} {} does not exist", path.display())));
    }
    file_sha256(path).map_err(input(&format!("reading {what} {}", path.display())))
}

/// Parses the dump, keeps the configured tag and date window, and writes
/// the post store.
pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<StageRecord, AppError> {
    let dump = cfg.dump.as_ref().ok_or_else(|| AppError::Config("--dump is required".into()))?;
    let dump_hash = hash_input(dump, "dump")?;
    let run = StageRun::begin(cfg);
    eprintln!("[ingest] reading {}", dump.display());

    let file = File::open(dump).map_err(input(&format!("opening {}", dump.display())))?;
    let mut reader = DumpReader::new(BufReader::with_capacity(1 << 16, file), ParseMode::Lenient);
    let (store, stats) = filter_posts(reader.by_ref(), &cfg.tag, cfg.window).map_err(input(&dump.display().to_string()))?;
    let parse = reader.stats();
    if parse.skipped_rows > 0 {
        eprintln!("[ingest] skipped {} malformed row(s)", parse.skipped_rows);
    }
    eprintln!(
        "[ingest] kept {} of {} questions, {} answers, {} orphan answers",
        stats.kept_questions, stats.total_questions, stats.kept_answers, stats.orphan_answers
    );

    create_out_dir(cfg)?;
    let store_path = cfg.store_path();
    save_store(&store, &store_path).map_err(pipeline("writing store"))?;

    let mut run = run;
    run.manifest.inputs.insert("dump".into(), dump_hash.clone());
    let counts = BTreeMap::from([
        ("rows".into(), parse.rows),
        ("skipped_rows".into(), parse.skipped_rows),
        ("tag_warnings".into(), parse.tag_warnings),
        ("questions".into(), stats.kept_questions),
        ("dropped_questions".into(), stats.dropped_questions),
        ("answers".into(), stats.kept_answers),
        ("orphan_answers".into(), stats.orphan_answers),
    ]);
    let fp = fingerprint("ingest", cfg, &INGEST_KEYS, &[&dump_hash]);
    run.finish("ingest", fp, vec![store_path], counts)
}

/// Store questions that carry enough tokens to model, in id order. The
/// topic labels in `topics.json` are parallel to this list.
pub fn modeled_documents(store: &PostStore) -> Vec<CleanDocument> {
    store.questions().map(preprocess_post).filter(CleanDocument::is_modelable).collect()
}

/// The configured embedding provider.
pub fn make_provider(cfg: &PipelineConfig) -> Result<Box<dyn EmbeddingProvider>, AppError> {
    match cfg.embedder {
        EmbedderKind::Builtin => BuiltinEmbedder::new(cfg.builtin_dim(), cfg.seed)
            .map(|e| Box::new(e) as Box<dyn EmbeddingProvider>)
            .map_err(|e| AppError::Config(e.to_string())),
        EmbedderKind::Http => {
            let endpoint = cfg.endpoint.as_deref().ok_or_else(|| AppError::Config("--endpoint is required".into()))?;
            HttpEmbedder::new(endpoint, cfg.dim, RetryPolicy::default())
                .map(|e| Box::new(e) as Box<dyn EmbeddingProvider>)
                .map_err(|e| AppError::Config(e.to_string()))
        }
    }
}

fn load_store_input(cfg: &PipelineConfig) -> Result<(PostStore, String), AppError> {
    let path = cfg.store_path();
    let hash = hash_input(&path, "store")?;
    let store = load_store(&path).map_err(input(&path.display().to_string()))?;
    Ok((store, hash))
}

fn embed_documents(docs: &[CleanDocument], embedder: &dyn TextEmbedder) -> Result<Vec<Vec<f64>>, AppError> {
    let texts: Vec<String> = docs.iter().map(|d| d.clean_text.clone()).collect();
    let vectors = embedder.embed_texts(&texts).map_err(pipeline("embedding documents"))?;
    Ok(vectors.iter().map(|v| v.to_f64()).collect())
}

fn open_cache(cfg: &PipelineConfig) -> Result<EmbeddingCache, AppError> {
    EmbeddingCache::open(&cfg.cache_path()).map_err(input("embedding cache"))
}

fn cache_counts(cache: &EmbeddingCache, counts: &mut BTreeMap<String, u64>) {
    let stats = cache.stats();
    counts.insert("cache_hits".into(), stats.hits);
    counts.insert("cache_misses".into(), stats.misses);
}

/// Embeds, reduces and clusters the modeled questions, then names the
/// topics. Writes `topics.json` plus the requested topic tables.
pub fn cmd_topics(cfg: &PipelineConfig) -> Result<StageRecord, AppError> {
    let (store, store_hash) = load_store_input(cfg)?;
    let mut run = StageRun::begin(cfg);
    let docs = modeled_documents(&store);
    let n = docs.len();
    eprintln!("[topics] {n} modelable questions");
    if n < cfg.reduce_dim.max(2) {
        return Err(AppError::Pipeline(format!(
            "{n} modelable questions; need at least {}",
            cfg.reduce_dim.max(2)
        )));
    }

    let provider = make_provider(cfg)?;
    create_out_dir(cfg)?;
    let cache = open_cache(cfg)?;
    let embedder = CachedEmbedder::new(provider.as_ref(), &cache).with_batch_size(cfg.batch_size);
    let vectors = embed_documents(&docs, &embedder)?;
    cache.flush().map_err(pipeline("saving embedding cache"))?;

    let reduction = fit_reduction(&vectors, cfg.reduce_dim).map_err(pipeline("dimensionality reduction"))?;
    if let Some(w) = &reduction.warning {
        eprintln!("[topics] warning: {w}");
    }
    let reduced = reduction.transform_all(&vectors);

    let seed = cfg.cluster_seed();
    let assignment = match cfg.cluster {
        ClusterAlgorithm::KMeans => {
            let k = cfg.k.unwrap_or_else(|| default_k(n)).min(n);
            eprintln!("[topics] k-means with k = {k}");
            kmeans(&reduced, k, seed).map_err(pipeline("k-means"))?.assignment
        }
        ClusterAlgorithm::Dbscan => {
            eprintln!("[topics] DBSCAN with eps = {}, min-pts = {}", cfg.eps, cfg.min_pts);
            dbscan(&reduced, cfg.eps, cfg.min_pts, seed).map_err(pipeline("DBSCAN"))?
        }
    };
    if assignment.topic_count() == 0 {
        return Err(AppError::Pipeline(
            "every question was labelled noise; try a larger --eps or a smaller --min-pts".into(),
        ));
    }
    let tokens: Vec<Vec<&str>> = docs.iter().map(|d| d.tokens.iter().map(String::as_str).collect()).collect();
    let weights = compute_ctfidf(&tokens, &assignment).map_err(pipeline("c-TF-IDF"))?;
    let topics = build_topics(&weights, &assignment).map_err(pipeline("naming topics"))?;
    eprintln!(
        "[topics] {} topics, {} noise questions",
        topics.len(),
        assignment.noise_count()
    );

    let artifact = TopicModelArtifact::new(&assignment, reduction.target_dim, &topics);
    let mut outputs = vec![cfg.topics_path()];
    run.write(&cfg.topics_path(), artifact.to_json().as_bytes())?;
    for format in &cfg.formats {
        let path = match format {
            OutputFormat::Markdown => cfg.out.join("topics.md"),
            OutputFormat::Csv => cfg.out.join("topics.csv"),
            OutputFormat::Json => continue,
        };
        run.write(&path, emit_topics_table(&artifact, *format).as_bytes())?;
        outputs.push(path);
    }

    run.manifest.inputs.insert("store".into(), store_hash.clone());
    let mut counts = BTreeMap::from([
        ("modeled_questions".into(), n as u64),
        ("topics".into(), topics.len() as u64),
        ("noise_questions".into(), assignment.noise_count() as u64),
        ("reduced_dim".into(), reduction.target_dim as u64),
    ]);
    cache_counts(&cache, &mut counts);
    let fp = fingerprint("topics", cfg, &[&EMBED_KEYS[..], &TOPIC_KEYS[..]].concat(), &[&store_hash]);
    run.finish("topics", fp, outputs, counts)
}

/// Summarizes every topic in `topics.json`: a digest plus problem/solution
/// pairs for its most central questions.
pub fn cmd_summarize(cfg: &PipelineConfig) -> Result<StageRecord, AppError> {
    let (store, store_hash) = load_store_input(cfg)?;
    let topics_path = cfg.topics_path();
    let topics_hash = hash_input(&topics_path, "topic model")?;
    let text = std::fs::read_to_string(&topics_path).map_err(input(&topics_path.display().to_string()))?;
    let artifact = TopicModelArtifact::from_json(&text).map_err(input(&topics_path.display().to_string()))?;

    let mut run = StageRun::begin(cfg);
    let docs = modeled_documents(&store);
    if artifact.labels.len() != docs.len() {
        return Err(AppError::Input(format!(
            "{} has {} labels but the store has {} modelable questions; rerun the topics stage",
            topics_path.display(),
            artifact.labels.len(),
            docs.len()
        )));
    }

    let provider = make_provider(cfg)?;
    let cache = open_cache(cfg)?;
    let embedder = CachedEmbedder::new(provider.as_ref(), &cache).with_batch_size(cfg.batch_size);
    let vectors = embed_documents(&docs, &embedder)?;

    let topics = artifact.topics();
    let mut records = Vec::with_capacity(topics.len());
    let mut pair_count = 0u64;
    for topic in &topics {
        let members = TopicMembers {
            topic_id: topic.id,
            members: docs
                .iter()
                .zip(&vectors)
                .zip(&artifact.labels)
                .filter(|(_, &label)| label == topic.id)
                .map(|((d, v), _)| (d.post_id, v.clone()))
                .collect(),
        };
        let (digest, pairs) = build_topic_report(topic, &members, &store, &embedder, &cfg.summary, cfg.summary_seed())
            .map_err(pipeline(&format!("summarizing topic {}", topic.id)))?;
        eprintln!("[summarize] topic {} ({}): {} pairs", topic.id, topic.name, pairs.len());
        pair_count += pairs.len() as u64;
        records.push(TopicReportRecord::new(&digest, &pairs));
    }
    cache.flush().map_err(pipeline("saving embedding cache"))?;

    let mut outputs = Vec::new();
    for format in &cfg.formats {
        let path = cfg.out.join(match format {
            OutputFormat::Markdown => "summaries.md",
            OutputFormat::Csv => "summaries.csv",
            OutputFormat::Json => "report.json",
        });
        run.write(&path, emit_report(&records, &topics, *format).as_bytes())?;
        outputs.push(path);
    }

    run.manifest.inputs.insert("store".into(), store_hash.clone());
    run.manifest.inputs.insert("topics".into(), topics_hash.clone());
    let mut counts = BTreeMap::from([("topics".into(), records.len() as u64), ("pairs".into(), pair_count)]);
    cache_counts(&cache, &mut counts);
    let keys = [&EMBED_KEYS[..], &SUMMARY_KEYS[..]].concat();
    let fp = fingerprint("summarize", cfg, &keys, &[&store_hash, &topics_hash]);
    run.finish("summarize", fp, outputs, counts)
}

fn mark_reused(cfg: &PipelineConfig, mut manifest: RunManifest, stage: &str) -> Result<(), AppError> {
    eprintln!("[{stage}] up to date");
    manifest.config = cfg.snapshot();
    if let Some(record) = manifest.stages.get_mut(stage) {
        record.reused = true;
    }
    manifest.save(&cfg.manifest_path())
}

/// Runs all stages, reusing any whose inputs, settings and outputs are
/// unchanged since the manifest was written.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<RunManifest, AppError> {
    let dump = cfg.dump.as_ref().ok_or_else(|| AppError::Config("--dump is required".into()))?;
    let dump_hash = hash_input(dump, "dump")?;

    let manifest = RunManifest::load(&cfg.manifest_path()).unwrap_or_default();
    let fp = fingerprint("ingest", cfg, &INGEST_KEYS, &[&dump_hash]);
    if manifest.is_current("ingest", &fp) {
        mark_reused(cfg, manifest, "ingest")?;
    } else {
        cmd_ingest(cfg)?;
    }

    let store_hash = hash_input(&cfg.store_path(), "store")?;
    let manifest = RunManifest::load(&cfg.manifest_path()).unwrap_or_default();
    let fp = fingerprint("topics", cfg, &[&EMBED_KEYS[..], &TOPIC_KEYS[..]].concat(), &[&store_hash]);
    if manifest.is_current("topics", &fp) {
        mark_reused(cfg, manifest, "topics")?;
    } else {
        cmd_topics(cfg)?;
    }

    let topics_hash = hash_input(&cfg.topics_path(), "topic model")?;
    let manifest = RunManifest::load(&cfg.manifest_path()).unwrap_or_default();
    let keys = [&EMBED_KEYS[..], &SUMMARY_KEYS[..]].concat();
    let fp = fingerprint("summarize", cfg, &keys, &[&store_hash, &topics_hash]);
    if manifest.is_current("summarize", &fp) {
        mark_reused(cfg, manifest, "summarize")?;
    } else {
        cmd_summarize(cfg)?;
    }

    Ok(RunManifest::load(&cfg.manifest_path()).unwrap_or_default())
}
