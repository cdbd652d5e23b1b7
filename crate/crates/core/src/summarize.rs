//! Extractive summaries of topic questions (problems) and of their
//! well-received answers (solutions).
//!
//! Sentence importance comes from clustering: sentence embeddings are split
//! into `m` groups with seeded k-means and the sentence closest to each
//! group's centroid is kept, in original order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine, EmbedError, TextEmbedder};
use crate::ingest::{PostStore, PostType, RawPost};
use crate::preprocess::preprocess_post;
use crate::topics::{kmeans, squared_distance, Topic, TopicsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummaryParams {
    /// Question/answer pairs per topic (K).
    pub questions_per_topic: usize,
    /// Questions pooled into the topic digest (M).
    pub pool_size: usize,
    pub sentences_question: usize,
    pub sentences_answer: usize,
    pub sentences_digest: usize,
    /// Non-accepted answers need at least this score.
    pub score_min: i64,
}

impl Default for SummaryParams {
    fn default() -> Self {
        Self {
            questions_per_topic: 3,
            pool_size: 50,
            sentences_question: 2,
            sentences_answer: 2,
            sentences_digest: 5,
            score_min: 2,
        }
    }
}

/// Sentences available for selection, each tagged with its post.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentencePool {
    pub sentences: Vec<String>,
    pub post_ids: Vec<u64>,
}

impl SentencePool {
    pub fn push(&mut self, sentence: String, post_id: u64) {
        self.sentences.push(sentence);
        self.post_ids.push(post_id);
    }

    pub fn from_post(sentences: &[String], post_id: u64) -> Self {
        Self {
            sentences: sentences.to_vec(),
            post_ids: vec![post_id; sentences.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractiveSummary {
    pub sentences: Vec<String>,
    /// Posts that contributed a selected sentence, in first-use order.
    pub source_post_ids: Vec<u64>,
    /// Pool positions of the selected sentences, strictly increasing.
    pub indices: Vec<usize>,
    pub target_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QAPairSummary {
    pub topic_id: i64,
    pub question_id: u64,
    pub problem: ExtractiveSummary,
    /// Absent when no answer passes the filter.
    pub solution: Option<ExtractiveSummary>,
}

impl QAPairSummary {
    /// Question id followed by contributing answer ids.
    pub fn sources(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let solution_ids = self.solution.iter().flat_map(|s| s.source_post_ids.iter());
        for &id in std::iter::once(&self.question_id).chain(&self.problem.source_post_ids).chain(solution_ids) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicDigest {
    pub topic_id: i64,
    pub summary: ExtractiveSummary,
}

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("summary length must be positive")]
    ZeroLength,
    #[error("{sentences} sentences but {vectors} vectors")]
    VectorCount { sentences: usize, vectors: usize },
    #[error("question {0} is not in the store")]
    UnknownQuestion(u64),
    #[error("topic {0} has no member questions")]
    EmptyTopic(i64),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Topics(#[from] TopicsError),
}

/// Picks at most `m` sentences from `pool`.
///
/// Repeated sentence texts are collapsed to their first occurrence. When no
/// more than `m` distinct sentences remain they are all returned;
/// otherwise k-means with `k = m` groups the sentence vectors and each
/// group contributes the sentence nearest its centroid (lowest position on
/// ties). Output follows pool order.
pub fn extractive_summarize(
    pool: &SentencePool,
    vectors: &[Vec<f64>],
    m: usize,
    seed: u64,
) -> Result<ExtractiveSummary, SummarizeError> {
    if m == 0 {
        return Err(SummarizeError::ZeroLength);
    }
    if vectors.len() != pool.len() || pool.post_ids.len() != pool.len() {
        return Err(SummarizeError::VectorCount {
            sentences: pool.len(),
            vectors: vectors.len(),
        });
    }
    let mut seen = HashSet::new();
    let unique: Vec<usize> = (0..pool.len()).filter(|&i| seen.insert(pool.sentences[i].as_str())).collect();

    let selected: Vec<usize> = if unique.len() <= m {
        unique
    } else {
        let points: Vec<Vec<f64>> = unique.iter().map(|&i| vectors[i].clone()).collect();
        let fit = kmeans(&points, m, seed)?;
        let mut picks = Vec::with_capacity(m);
        for (c, centroid) in fit.centroids.iter().enumerate() {
            let label = c as i64 + 1;
            let best = fit
                .assignment
                .labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == label)
                .map(|(p, _)| (p, squared_distance(&points[p], centroid)))
                .fold(None::<(usize, f64)>, |best, (p, d)| match best {
                    Some((_, bd)) if bd <= d => best,
                    _ => Some((p, d)),
                });
            if let Some((p, _)) = best {
                picks.push(unique[p]);
            }
        }
        picks.sort_unstable();
        picks
    };

    let mut source_post_ids = Vec::new();
    for &i in &selected {
        if !source_post_ids.contains(&pool.post_ids[i]) {
            source_post_ids.push(pool.post_ids[i]);
        }
    }
    Ok(ExtractiveSummary {
        sentences: selected.iter().map(|&i| pool.sentences[i].clone()).collect(),
        source_post_ids,
        indices: selected,
        target_len: m,
    })
}

/// Embeds the pool's sentences and summarizes them.
pub fn summarize_pool(
    pool: &SentencePool,
    embedder: &dyn TextEmbedder,
    m: usize,
    seed: u64,
) -> Result<ExtractiveSummary, SummarizeError> {
    if m == 0 {
        return Err(SummarizeError::ZeroLength);
    }
    if pool.is_empty() {
        return extractive_summarize(pool, &[], m, seed);
    }
    let vectors: Vec<Vec<f64>> = embedder
        .embed_texts(&pool.sentences)?
        .iter()
        .map(|v| v.to_f64())
        .collect();
    extractive_summarize(pool, &vectors, m, seed)
}

/// Answers of `question` that are accepted or score at least `score_min`,
/// in store order.
pub fn filter_answers<'s>(question: &RawPost, store: &'s PostStore, score_min: i64) -> Vec<&'s RawPost> {
    debug_assert_eq!(question.post_type, PostType::Question);
    store
        .answers(question.id)
        .iter()
        .filter(|a| Some(a.id) == question.accepted_answer_id || a.score >= score_min)
        .collect()
}

/// Member questions ordered by cosine similarity to `centroid`, highest
/// first, ties by ascending id; truncated to `k`.
pub fn select_representative_questions(members: &[(u64, Vec<f64>)], centroid: &[f64], k: usize) -> Vec<u64> {
    let mut scored: Vec<(u64, f64)> = members.iter().map(|(id, v)| (*id, cosine(v, centroid))).collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite cosine").then(a.0.cmp(&b.0)));
    scored.into_iter().take(k).map(|(id, _)| id).collect()
}

pub fn summarize_question(
    question_id: u64,
    store: &PostStore,
    embedder: &dyn TextEmbedder,
    m_q: usize,
    seed: u64,
) -> Result<ExtractiveSummary, SummarizeError> {
    let question = store.question(question_id).ok_or(SummarizeError::UnknownQuestion(question_id))?;
    let doc = preprocess_post(question);
    summarize_pool(&SentencePool::from_post(&doc.sentences, question_id), embedder, m_q, seed)
}

/// Summarizes the filtered answers of a question, or `None` when no answer
/// qualifies (or the qualifying ones have no text left after cleaning).
pub fn summarize_answers(
    question_id: u64,
    store: &PostStore,
    embedder: &dyn TextEmbedder,
    m_a: usize,
    score_min: i64,
    seed: u64,
) -> Result<Option<ExtractiveSummary>, SummarizeError> {
    let question = store.question(question_id).ok_or(SummarizeError::UnknownQuestion(question_id))?;
    let mut pool = SentencePool::default();
    for answer in filter_answers(question, store, score_min) {
        for sentence in preprocess_post(answer).sentences {
            pool.push(sentence, answer.id);
        }
    }
    if pool.is_empty() {
        return Ok(None);
    }
    summarize_pool(&pool, embedder, m_a, seed).map(Some)
}

/// A topic's member questions with their document vectors (original
/// embedding space).
#[derive(Debug, Clone)]
pub struct TopicMembers {
    pub topic_id: i64,
    pub members: Vec<(u64, Vec<f64>)>,
}

impl TopicMembers {
    pub fn centroid(&self) -> Result<Vec<f64>, SummarizeError> {
        let first = self.members.first().ok_or(SummarizeError::EmptyTopic(self.topic_id))?;
        let mut c = vec![0.0; first.1.len()];
        for (_, v) in &self.members {
            for (ci, x) in c.iter_mut().zip(v) {
                *ci += x;
            }
        }
        for ci in &mut c {
            *ci /= self.members.len() as f64;
        }
        Ok(c)
    }
}

/// Per-topic seed: `seed XOR topic id`, so reports do not depend on the
/// order topics are processed in.
pub fn topic_seed(seed: u64, topic_id: i64) -> u64 {
    seed ^ topic_id as u64
}

/// Digest over the `pool_size` most central questions plus one
/// problem/solution pair for each of the `questions_per_topic` most central.
pub fn build_topic_report(
    topic: &Topic,
    members: &TopicMembers,
    store: &PostStore,
    embedder: &dyn TextEmbedder,
    params: &SummaryParams,
    seed: u64,
) -> Result<(TopicDigest, Vec<QAPairSummary>), SummarizeError> {
    let seed = topic_seed(seed, topic.id);
    let centroid = members.centroid()?;
    let ranked = select_representative_questions(&members.members, &centroid, members.members.len());

    let mut pool = SentencePool::default();
    for &qid in ranked.iter().take(params.pool_size) {
        let question = store.question(qid).ok_or(SummarizeError::UnknownQuestion(qid))?;
        for sentence in preprocess_post(question).sentences {
            pool.push(sentence, qid);
        }
    }
    let digest = TopicDigest {
        topic_id: topic.id,
        summary: summarize_pool(&pool, embedder, params.sentences_digest, seed)?,
    };

    let mut pairs = Vec::new();
    for &qid in ranked.iter().take(params.questions_per_topic) {
        pairs.push(QAPairSummary {
            topic_id: topic.id,
            question_id: qid,
            problem: summarize_question(qid, store, embedder, params.sentences_question, seed)?,
            solution: summarize_answers(qid, store, embedder, params.sentences_answer, params.score_min, seed)?,
        });
    }
    Ok((digest, pairs))
}

/// One topic in `report.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicReportRecord {
    pub topic_id: i64,
    pub digest: Vec<String>,
    pub pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub question_id: u64,
    pub problem: Vec<String>,
    pub solution: Option<Vec<String>>,
    pub sources: Vec<u64>,
}

impl TopicReportRecord {
    pub fn new(digest: &TopicDigest, pairs: &[QAPairSummary]) -> Self {
        Self {
            topic_id: digest.topic_id,
            digest: digest.summary.sentences.clone(),
            pairs: pairs
                .iter()
                .map(|p| PairRecord {
                    question_id: p.question_id,
                    problem: p.problem.sentences.clone(),
                    solution: p.solution.as_ref().map(|s| s.sentences.clone()),
                    sources: p.sources(),
                })
                .collect(),
        }
    }
}
