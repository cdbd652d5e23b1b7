//! Deterministic synthetic dumps with planted topics, for tests and demos.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Words each planted topic draws from.
pub const VOCABULARIES: [[&str; 10]; 3] = [
    ["project", "proguard", "studio", "error", "build", "library", "file", "gradle", "android", "eclipse"],
    ["fragment", "recyclerview", "item", "view", "listview", "scroll", "adapter", "list", "layout", "row"],
    ["notification", "activity", "service", "gcm", "app", "analytics", "push", "back", "intent", "broadcast"],
];

const TOPIC_TAGS: [&str; 3] = ["gradle", "android-recyclerview", "push-notification"];

const FILLER: [&str; 20] = [
    "trying", "problem", "working", "code", "help", "issue", "want", "need", "example", "getting", "seems",
    "method", "class", "change", "run", "know", "time", "use", "using", "found",
];

const ANSWER_FILLER: [&str; 10] = [
    "try", "fixed", "worked", "solution", "add", "remove", "update", "instead", "check", "set",
];

const CONNECTORS: [&str; 13] = ["i", "the", "when", "to", "it", "my", "is", "but", "with", "a", "in", "this", "and"];

pub const QUESTIONS_PER_TOPIC: usize = 80;
pub const ANSWERS_PER_TOPIC: usize = 20;
/// Seed of the bundled fixture file.
pub const FIXTURE_SEED: u64 = 42;

/// A generated dump together with the planted topic of each question.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub xml: String,
    /// Question id to index into [`VOCABULARIES`].
    pub truth: BTreeMap<u64, usize>,
}

struct Question {
    topic: usize,
    accepted: Option<u64>,
}

struct Answer {
    id: u64,
    parent: u64,
    topic: usize,
    score: i64,
}

/// 300 posts: for each of the three vocabularies, 80 questions and 20
/// answers. Every fifth question carries a code block that must not leak
/// into the text.
pub fn generate_synthetic(seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut topics: Vec<usize> = (0..VOCABULARIES.len()).flat_map(|t| [t; QUESTIONS_PER_TOPIC]).collect();
    topics.shuffle(&mut rng);
    let mut questions: Vec<Question> = topics.iter().map(|&topic| Question { topic, accepted: None }).collect();

    let mut answers = Vec::new();
    let mut next_id = questions.len() as u64 + 1;
    for topic in 0..VOCABULARIES.len() {
        let ids: Vec<u64> = (1..=questions.len() as u64).filter(|&id| questions[id as usize - 1].topic == topic).collect();
        for j in 0..ANSWERS_PER_TOPIC {
            let parent = ids[(j * 4) % ids.len()];
            let score = [-1, 0, 2, 3, 5][j % 5];
            if j % 3 == 0 {
                questions[parent as usize - 1].accepted = Some(next_id);
            }
            answers.push(Answer { id: next_id, parent, topic, score });
            next_id += 1;
        }
    }

    let start = Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap();
    let span_secs = 12 * 365 * 24 * 3600;
    let mut dates = BTreeMap::new();
    let mut xml = String::from("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n");
    let mut truth = BTreeMap::new();
    for (idx, q) in questions.iter().enumerate() {
        let id = idx as u64 + 1;
        truth.insert(id, q.topic);
        let created = start + Duration::seconds(rng.gen_range(0..span_secs));
        dates.insert(id, created);
        let vocab = &VOCABULARIES[q.topic];
        let title = capitalize(&words(&mut rng, vocab, 3, &FILLER, 1, 0).join(" "));
        let mut body = String::new();
        for _ in 0..3 {
            let _ = write!(body, "<p>{}</p>", sentence(&mut rng, vocab, &FILLER));
        }
        if idx % 5 == 0 {
            let other = &VOCABULARIES[(q.topic + 1) % VOCABULARIES.len()];
            let _ = write!(body, "<pre><code>{}.{}(&amp;x);</code></pre>", other[0], other[1]);
        }
        let _ = writeln!(
            xml,
            "  <row Id=\"{id}\" PostTypeId=\"1\"{} CreationDate=\"{}\" Score=\"{}\" Body=\"{}\" Title=\"{}\" Tags=\"{}\" />",
            q.accepted.map(|a| format!(" AcceptedAnswerId=\"{a}\"")).unwrap_or_default(),
            created.format("%Y-%m-%dT%H:%M:%S%.3f"),
            rng.gen_range(0..20),
            escape_attr(&body),
            escape_attr(&title),
            escape_attr(&format!("<android><{}>", TOPIC_TAGS[q.topic])),
        );
    }
    for a in &answers {
        let created = dates[&a.parent] + Duration::hours(rng.gen_range(1..240));
        let vocab = &VOCABULARIES[a.topic];
        let body = format!(
            "<p>{}</p><p>{}</p>",
            sentence(&mut rng, vocab, &ANSWER_FILLER),
            sentence(&mut rng, vocab, &ANSWER_FILLER)
        );
        let _ = writeln!(
            xml,
            "  <row Id=\"{}\" PostTypeId=\"2\" ParentId=\"{}\" CreationDate=\"{}\" Score=\"{}\" Body=\"{}\" />",
            a.id,
            a.parent,
            created.format("%Y-%m-%dT%H:%M:%S%.3f"),
            a.score,
            escape_attr(&body),
        );
    }
    xml.push_str("</posts>\n");
    SyntheticCorpus { xml, truth }
}

fn words(rng: &mut ChaCha8Rng, vocab: &[&str], n_vocab: usize, filler: &[&str], n_filler: usize, n_conn: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    out.extend(vocab.choose_multiple(rng, n_vocab).map(|w| w.to_string()));
    out.extend((0..n_filler).map(|_| filler.choose(rng).expect("non-empty").to_string()));
    out.extend((0..n_conn).map(|_| CONNECTORS.choose(rng).expect("non-empty").to_string()));
    out.shuffle(rng);
    out
}

fn sentence(rng: &mut ChaCha8Rng, vocab: &[&str], filler: &[&str]) -> String {
    format!("{}.", capitalize(&words(rng, vocab, 3, filler, 2, 2).join(" ")))
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
