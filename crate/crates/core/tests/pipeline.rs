mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use apidigest::report::{cmd_run, cmd_summarize, cmd_topics, AppError, PipelineConfig};
use common::fixture_path;

fn config(out: &Path, extra: &[(&str, &str)]) -> PipelineConfig {
    let mut pairs: BTreeMap<String, String> = BTreeMap::from([
        ("dump".into(), fixture_path("synthetic_posts.xml").display().to_string()),
        ("out".into(), out.display().to_string()),
        ("cluster".into(), "kmeans".into()),
        ("k".into(), "3".into()),
    ]);
    for (k, v) in extra {
        pairs.insert(k.to_string(), v.to_string());
    }
    PipelineConfig::from_pairs(&pairs).unwrap()
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apidigest"))
}

const REPORTS: [&str; 3] = ["report.json", "summaries.md", "summaries.csv"];

#[test]
fn rerun_reuses_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[]);
    let first = cmd_run(&cfg).unwrap();
    assert!(first.stages.values().all(|s| !s.reused));
    let second = cmd_run(&cfg).unwrap();
    assert_eq!(second.stages.len(), 3);
    assert!(second.stages.values().all(|s| s.reused), "{:?}", second.stages);

    let reseeded = cmd_run(&config(dir.path(), &[("seed", "7")])).unwrap();
    assert!(reseeded.stages["ingest"].reused);
    assert!(!reseeded.stages["topics"].reused);
    assert!(!reseeded.stages["summarize"].reused);
}

#[test]
fn deleted_reports_come_back_from_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[]);
    cmd_run(&cfg).unwrap();
    let before: Vec<Vec<u8>> = REPORTS.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
    for f in REPORTS {
        std::fs::remove_file(dir.path().join(f)).unwrap();
    }
    let record = cmd_summarize(&cfg).unwrap();
    assert_eq!(record.counts["cache_misses"], 0);
    assert!(record.counts["cache_hits"] > 0);
    let after: Vec<Vec<u8>> = REPORTS.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn manifest_records_inputs_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = cmd_run(&config(dir.path(), &[])).unwrap();
    assert_eq!(
        manifest.inputs["dump"],
        apidigest::util::file_sha256(&fixture_path("synthetic_posts.xml")).unwrap()
    );
    for name in ["store.ndjson", "topics.json", "topics.md", "topics.csv", "report.json"] {
        let path = dir.path().join(name).display().to_string();
        assert_eq!(manifest.artifacts[&path], apidigest::util::file_sha256(Path::new(&path)).unwrap());
    }
    assert_eq!(manifest.stages["ingest"].counts["questions"], 240);
    assert_eq!(manifest.config["k"], "3");
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn format_selects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    cmd_run(&config(dir.path(), &[("format", "md")])).unwrap();
    assert!(dir.path().join("summaries.md").is_file());
    assert!(dir.path().join("topics.json").is_file());
    assert!(!dir.path().join("report.json").exists());
    assert!(!dir.path().join("topics.csv").exists());
}

#[test]
fn stale_topic_model_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[]);
    cmd_run(&cfg).unwrap();
    let narrow = config(dir.path(), &[("from", "2016-01-01")]);
    apidigest::report::cmd_ingest(&narrow).unwrap();
    assert!(matches!(cmd_summarize(&narrow), Err(AppError::Input(_))));
}

#[test]
fn too_few_questions_is_a_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &[("tag", "gradle"), ("to", "2010-06-01")]);
    apidigest::report::cmd_ingest(&cfg).unwrap();
    assert!(matches!(cmd_topics(&cfg), Err(AppError::Pipeline(_))));
}

#[test]
fn missing_dump_exits_3_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = cli()
        .args(["run", "--dump", "/nonexistent/Posts.xml", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn malformed_dump_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("Posts.xml");
    std::fs::write(&dump, "<posts><row Id=\"1\" PostTypeId=\"1\"").unwrap();
    let out = dir.path().join("out");
    let status = cli().arg("ingest").arg("--dump").arg(&dump).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn bad_settings_exit_2() {
    let dump = fixture_path("synthetic_posts.xml");
    for args in [
        vec!["--reduce-dim", "1"],
        vec!["--cluster", "spectral"],
        vec!["--from", "2020-01-01", "--to", "2019-01-01"],
        vec!["--embedder", "http"],
        vec!["--bogus", "1"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let status = cli()
            .arg("run")
            .arg("--dump")
            .arg(&dump)
            .arg("--out")
            .arg(dir.path().join("out"))
            .args(&args)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn all_noise_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let output = cli()
        .arg("run")
        .arg("--dump")
        .arg(fixture_path("synthetic_posts.xml"))
        .arg("--out")
        .arg(dir.path())
        .args(["--eps", "0.000001", "--min-pts", "5"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("noise"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "# planted topics\ndump = {}\ncluster = kmeans\nk = 2\nformat = md\n",
            fixture_path("synthetic_posts.xml").display()
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = cli()
        .arg("run")
        .arg("--config")
        .arg(&conf)
        .args(["--k", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let topics = std::fs::read_to_string(out.join("topics.md")).unwrap();
    assert_eq!(topics.lines().count(), 2 + 3);
}
