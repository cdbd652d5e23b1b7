//! Topic and summary tables in Markdown, CSV and JSON.

use super::OutputFormat;
use crate::summarize::{PairRecord, TopicReportRecord};
use crate::topics::{Topic, TopicModelArtifact};

/// Topic | Count | Name | Representation, one row per topic in id order.
/// JSON output is the full topic model artifact.
pub fn emit_topics_table(artifact: &TopicModelArtifact, format: OutputFormat) -> String {
    let topics = artifact.topics();
    match format {
        OutputFormat::Markdown => {
            let mut out = String::from("| Topic | Count | Name | Representation |\n| --- | --- | --- | --- |\n");
            for t in &topics {
                out.push_str(&format!(
                    "| {} | {} | {} | {} |\n",
                    t.id,
                    t.count,
                    md_cell(&t.name),
                    md_cell(&representation(t))
                ));
            }
            out
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["Topic", "Count", "Name", "Representation"]).expect("in-memory write");
            for t in &topics {
                w.write_record([t.id.to_string(), t.count.to_string(), t.name.clone(), representation(t)])
                    .expect("in-memory write");
            }
            into_string(w)
        }
        OutputFormat::Json => artifact.to_json(),
    }
}

fn representation(t: &Topic) -> String {
    t.representation().join(", ")
}

/// Questions | Answers, one row per problem/solution pair. A pair without a
/// qualifying answer gets an empty Answers cell.
pub fn emit_summary_table(pairs: &[PairRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Markdown => {
            let mut out = String::from("| Questions | Answers |\n| --- | --- |\n");
            for p in pairs {
                out.push_str(&format!(
                    "| {} | {} |\n",
                    md_cell(&p.problem.join(" ")),
                    md_cell(&solution_text(p))
                ));
            }
            out
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["Questions", "Answers"]).expect("in-memory write");
            for p in pairs {
                w.write_record([p.problem.join(" "), solution_text(p)]).expect("in-memory write");
            }
            into_string(w)
        }
        OutputFormat::Json => json_lines(pairs),
    }
}

fn solution_text(p: &PairRecord) -> String {
    p.solution.as_ref().map(|s| s.join(" ")).unwrap_or_default()
}

/// The whole report: per-topic digest followed by its pair table.
pub fn emit_report(records: &[TopicReportRecord], topics: &[Topic], format: OutputFormat) -> String {
    match format {
        OutputFormat::Markdown => {
            let mut out = String::from("# Topic summaries\n");
            for r in records {
                let name = topics.iter().find(|t| t.id == r.topic_id).map(|t| t.name.as_str()).unwrap_or("");
                out.push_str(&format!("\n## Topic {}: {}\n\n", r.topic_id, name));
                if !r.digest.is_empty() {
                    out.push_str(&format!("{}\n\n", r.digest.join(" ")));
                }
                out.push_str(&emit_summary_table(&r.pairs, OutputFormat::Markdown));
            }
            out
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["Topic", "Question", "Questions", "Answers", "Sources"]).expect("in-memory write");
            for r in records {
                for p in &r.pairs {
                    let sources = p.sources.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
                    w.write_record([
                        r.topic_id.to_string(),
                        p.question_id.to_string(),
                        p.problem.join(" "),
                        solution_text(p),
                        sources,
                    ])
                    .expect("in-memory write");
                }
            }
            into_string(w)
        }
        OutputFormat::Json => json_lines(records),
    }
}

fn json_lines<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn md_cell(text: &str) -> String {
    text.replace('\\', "\\\\").replace('|', "\\|").replace(['\n', '\r'], " ")
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 is utf-8")
}
