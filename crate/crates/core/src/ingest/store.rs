use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};

use super::dump::parse_timestamp;
use super::{DateWindow, IngestError, PostType, RawPost};
use crate::util::write_atomically;

/// Questions of one tag and window, linked to their answers.
///
/// Immutable once built; answers for each question are ordered accepted
/// first, then by score descending, then by id ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostStore {
    questions: BTreeMap<u64, RawPost>,
    answers_by_parent: BTreeMap<u64, Vec<RawPost>>,
    orphan_count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub total_questions: u64,
    pub kept_questions: u64,
    pub dropped_questions: u64,
    pub kept_answers: u64,
    pub orphan_answers: u64,
}

impl PostStore {
    /// Links `questions` and `answers`. Answers whose parent is not among
    /// the questions are counted as orphans and dropped.
    pub fn from_posts(
        questions: impl IntoIterator<Item = RawPost>,
        answers: impl IntoIterator<Item = RawPost>,
    ) -> Self {
        let questions: BTreeMap<u64, RawPost> = questions.into_iter().map(|q| (q.id, q)).collect();
        let mut store = PostStore {
            questions,
            ..Default::default()
        };
        for answer in answers {
            store.attach(answer);
        }
        store.sort_answers();
        store
    }

    fn attach(&mut self, answer: RawPost) -> bool {
        let parent = answer.parent_id.expect("answers carry a parent id");
        if self.questions.contains_key(&parent) {
            self.answers_by_parent.entry(parent).or_default().push(answer);
            true
        } else {
            self.orphan_count += 1;
            false
        }
    }

    fn sort_answers(&mut self) {
        for (parent, answers) in self.answers_by_parent.iter_mut() {
            let accepted = self.questions[parent].accepted_answer_id;
            answers.sort_by(|a, b| {
                let a_acc = Some(a.id) == accepted;
                let b_acc = Some(b.id) == accepted;
                b_acc
                    .cmp(&a_acc)
                    .then(b.score.cmp(&a.score))
                    .then(a.id.cmp(&b.id))
            });
        }
    }

    pub fn question(&self, id: u64) -> Option<&RawPost> {
        self.questions.get(&id)
    }

    /// Questions in ascending id order.
    pub fn questions(&self) -> impl Iterator<Item = &RawPost> {
        self.questions.values()
    }

    /// Answers to `question_id` in store order; empty for unknown ids.
    pub fn answers(&self, question_id: u64) -> &[RawPost] {
        self.answers_by_parent
            .get(&question_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn question_count(&self) -> usize {
        self.questions.len()
    }

    pub fn answer_count(&self) -> usize {
        self.answers_by_parent.values().map(Vec::len).sum()
    }

    pub fn orphan_count(&self) -> u64 {
        self.orphan_count
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// Keeps questions tagged `tag` created inside `window`, plus every answer
/// to a kept question regardless of the answer's own date.
///
/// Answers seen before their parent are held back until the parent shows
/// up; dumps are id-ordered, so in practice this buffer stays tiny.
pub fn filter_posts<I>(posts: I, tag: &str, window: DateWindow) -> Result<(PostStore, FilterStats), IngestError>
where
    I: IntoIterator<Item = Result<RawPost, IngestError>>,
{
    let tag = tag.to_lowercase();
    let mut store = PostStore::default();
    let mut stats = FilterStats::default();
    let mut max_question_id = 0u64;
    let mut pending: Vec<RawPost> = Vec::new();
    let mut seen_ids: HashSet<u64> = HashSet::new();

    for post in posts {
        let post = post?;
        match post.post_type {
            PostType::Question => {
                stats.total_questions += 1;
                max_question_id = max_question_id.max(post.id);
                let keep = post.tags.contains(&tag) && window.contains(post.creation_date);
                if keep {
                    if !seen_ids.insert(post.id) {
                        return Err(IngestError::Row {
                            offset: 0,
                            message: format!("duplicate post id {}", post.id),
                        });
                    }
                    stats.kept_questions += 1;
                    store.questions.insert(post.id, post);
                } else {
                    stats.dropped_questions += 1;
                }
            }
            PostType::Answer => {
                let parent = post.parent_id.unwrap_or(0);
                if store.questions.contains_key(&parent) {
                    if !seen_ids.insert(post.id) {
                        return Err(IngestError::Row {
                            offset: 0,
                            message: format!("duplicate post id {}", post.id),
                        });
                    }
                    store.attach(post);
                    stats.kept_answers += 1;
                } else if parent > max_question_id {
                    pending.push(post);
                } else {
                    store.orphan_count += 1;
                    stats.orphan_answers += 1;
                }
            }
        }
    }
    for post in pending {
        if store.questions.contains_key(&post.parent_id.unwrap_or(0)) && seen_ids.insert(post.id) {
            store.attach(post);
            stats.kept_answers += 1;
        } else {
            store.orphan_count += 1;
            stats.orphan_answers += 1;
        }
    }
    store.sort_answers();
    Ok((store, stats))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: u64,
    #[serde(rename = "type")]
    kind: RecordKind,
    parent_id: Option<u64>,
    accepted_answer_id: Option<u64>,
    score: i64,
    creation_date: String,
    tags: Vec<String>,
    title: Option<String>,
    body_html: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RecordKind {
    Question,
    Answer,
}

impl From<&RawPost> for Record {
    fn from(p: &RawPost) -> Self {
        Record {
            id: p.id,
            kind: match p.post_type {
                PostType::Question => RecordKind::Question,
                PostType::Answer => RecordKind::Answer,
            },
            parent_id: p.parent_id,
            accepted_answer_id: p.accepted_answer_id,
            score: p.score,
            creation_date: p.creation_date.to_rfc3339_opts(SecondsFormat::Secs, true),
            tags: p.tags.clone(),
            title: p.title.clone(),
            body_html: p.body_html.clone(),
        }
    }
}

impl Record {
    fn into_post(self) -> Result<RawPost, String> {
        let post = RawPost {
            id: self.id,
            post_type: match self.kind {
                RecordKind::Question => PostType::Question,
                RecordKind::Answer => PostType::Answer,
            },
            parent_id: self.parent_id,
            accepted_answer_id: self.accepted_answer_id,
            score: self.score,
            creation_date: parse_timestamp(&self.creation_date)?,
            tags: self.tags,
            title: self.title,
            body_html: self.body_html,
        };
        post.validate()?;
        Ok(post)
    }
}

/// Writes the store as NDJSON: each question in id order, followed by its
/// answers in store order.
pub fn write_store<W: Write>(store: &PostStore, mut out: W) -> std::io::Result<()> {
    for q in store.questions() {
        serde_json::to_writer(&mut out, &Record::from(q))?;
        out.write_all(b"\n")?;
        for a in store.answers(q.id) {
            serde_json::to_writer(&mut out, &Record::from(a))?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}

/// Persists the store atomically. The orphan count is not part of the
/// file format; a reloaded store reports only orphans present in the file.
pub fn save_store(store: &PostStore, path: &Path) -> Result<(), IngestError> {
    write_atomically(path, |w| write_store(store, BufWriter::new(w)))?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<PostStore, IngestError> {
    let reader = BufReader::new(File::open(path)?);
    let mut questions = Vec::new();
    let mut answers = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| IngestError::Record {
            line: line_no,
            message: e.to_string(),
        })?;
        let post = record.into_post().map_err(|message| IngestError::Record { line: line_no, message })?;
        if !ids.insert(post.id) {
            return Err(IngestError::Record {
                line: line_no,
                message: format!("duplicate post id {}", post.id),
            });
        }
        match post.post_type {
            PostType::Question => questions.push(post),
            PostType::Answer => answers.push(post),
        }
    }
    Ok(PostStore::from_posts(questions, answers))
}
