use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apidigest::fixture::{generate_synthetic, FIXTURE_SEED};
use apidigest::report::{cmd_ingest, cmd_run, cmd_summarize, cmd_topics, read_config_file, AppError, PipelineConfig};

#[derive(Parser)]
#[command(name = "apidigest", version, about = "Topics and problem/solution summaries from Stack Exchange dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a Posts.xml dump into the post store.
    Ingest(Settings),
    /// Embed, reduce and cluster stored questions into named topics.
    Topics(Settings),
    /// Summarize each topic from topics.json.
    Summarize(Settings),
    /// All stages, reusing up-to-date results.
    Run(Settings),
    /// Write the synthetic planted-topic dump.
    GenFixture {
        #[arg(long, default_value_t = FIXTURE_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Every setting may also come from `--config FILE` (`key = value` lines);
/// flags win over the file.
#[derive(Args)]
struct Settings {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Posts.xml dump to ingest.
    #[arg(long)]
    dump: Option<String>,
    /// Post store path [default: OUT/store.ndjson].
    #[arg(long)]
    store: Option<String>,
    /// Tag to keep [default: android].
    #[arg(long)]
    tag: Option<String>,
    /// Window start, inclusive [default: 2009-01-01].
    #[arg(long)]
    from: Option<String>,
    /// Window end, exclusive [default: 2022-05-01].
    #[arg(long)]
    to: Option<String>,
    /// builtin or http [default: builtin].
    #[arg(long)]
    embedder: Option<String>,
    /// Base URL of the embedding service.
    #[arg(long)]
    endpoint: Option<String>,
    /// Builtin output dimension, or expected service dimension [default: 256].
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    reduce_dim: Option<String>,
    /// kmeans or dbscan [default: dbscan].
    #[arg(long)]
    cluster: Option<String>,
    /// k-means cluster count [default: max(2, floor(sqrt(n/2)))].
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    min_pts: Option<String>,
    #[arg(long)]
    questions_per_topic: Option<String>,
    #[arg(long)]
    pool_size: Option<String>,
    #[arg(long)]
    sentences_question: Option<String>,
    #[arg(long)]
    sentences_answer: Option<String>,
    #[arg(long)]
    sentences_digest: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    score_min: Option<String>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated md, csv, json [default: md,csv,json].
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
}

impl Settings {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("dump", &self.dump),
            ("store", &self.store),
            ("tag", &self.tag),
            ("from", &self.from),
            ("to", &self.to),
            ("embedder", &self.embedder),
            ("endpoint", &self.endpoint),
            ("dim", &self.dim),
            ("seed", &self.seed),
            ("reduce-dim", &self.reduce_dim),
            ("cluster", &self.cluster),
            ("k", &self.k),
            ("eps", &self.eps),
            ("min-pts", &self.min_pts),
            ("questions-per-topic", &self.questions_per_topic),
            ("pool-size", &self.pool_size),
            ("sentences-question", &self.sentences_question),
            ("sentences-answer", &self.sentences_answer),
            ("sentences-digest", &self.sentences_digest),
            ("score-min", &self.score_min),
            ("out", &self.out),
            ("format", &self.format),
            ("batch-size", &self.batch_size),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    fn resolve(&self) -> Result<PipelineConfig, AppError> {
        let mut layers = Vec::new();
        if let Some(path) = &self.config {
            layers.push(read_config_file(path)?);
        }
        layers.push(self.flags());
        PipelineConfig::from_layers(&layers)
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Ingest(s) => cmd_ingest(&s.resolve()?).map(drop),
        Command::Topics(s) => cmd_topics(&s.resolve()?).map(drop),
        Command::Summarize(s) => cmd_summarize(&s.resolve()?).map(drop),
        Command::Run(s) => cmd_run(&s.resolve()?).map(drop),
        Command::GenFixture { seed, out } => {
            let corpus = generate_synthetic(seed);
            apidigest::util::write_bytes_atomically(&out, corpus.xml.as_bytes())
                .map_err(|e| AppError::Pipeline(format!("writing {}: {e}", out.display())))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
