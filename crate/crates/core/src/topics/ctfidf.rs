use std::collections::{BTreeMap, BTreeSet};

use super::{TopicAssignment, TopicsError, NOISE};

/// Class-based TF-IDF weights.
///
/// For topic `c` and term `t`, `tf(t, c)` counts `t` in the concatenated
/// token streams of the topic's documents, `f(t)` sums that over topics,
/// and `A` is the average token count per topic. The weight is
/// `tf(t, c) * ln(1 + A / f(t))`.
///
/// Noise documents take no part. Terms that occur in fewer than two
/// documents are dropped from the vocabulary; `A` is computed before that
/// pruning, over every token of the non-noise documents.
#[derive(Debug, Clone, PartialEq)]
pub struct CtfidfWeights {
    topics: Vec<i64>,
    tf: BTreeMap<i64, BTreeMap<String, u64>>,
    term_totals: BTreeMap<String, u64>,
    avg_tokens: f64,
    weights: BTreeMap<i64, BTreeMap<String, f64>>,
}

/// Terms must appear in at least this many documents to be weighted.
const MIN_DOCUMENT_FREQUENCY: usize = 2;

pub fn compute_ctfidf<S: AsRef<str>>(docs: &[Vec<S>], labels: &TopicAssignment) -> Result<CtfidfWeights, TopicsError> {
    if docs.len() != labels.labels.len() {
        return Err(TopicsError::LabelCount {
            labels: labels.labels.len(),
            docs: docs.len(),
        });
    }
    let topics: BTreeSet<i64> = labels.labels.iter().copied().filter(|&l| l != NOISE).collect();
    if topics.is_empty() {
        return Err(TopicsError::AllNoise);
    }

    let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total_tokens = 0usize;
    for (doc, &label) in docs.iter().zip(&labels.labels) {
        if label == NOISE {
            continue;
        }
        total_tokens += doc.len();
        let unique: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for term in unique {
            *doc_freq.entry(term).or_default() += 1;
        }
    }
    let avg_tokens = total_tokens as f64 / topics.len() as f64;

    let mut tf: BTreeMap<i64, BTreeMap<String, u64>> = topics.iter().map(|&t| (t, BTreeMap::new())).collect();
    let mut term_totals: BTreeMap<String, u64> = BTreeMap::new();
    for (doc, &label) in docs.iter().zip(&labels.labels) {
        if label == NOISE {
            continue;
        }
        let counts = tf.get_mut(&label).expect("topic registered");
        for term in doc {
            let term = term.as_ref();
            if doc_freq[term] < MIN_DOCUMENT_FREQUENCY {
                continue;
            }
            *counts.entry(term.to_string()).or_default() += 1;
            *term_totals.entry(term.to_string()).or_default() += 1;
        }
    }

    let weights = tf
        .iter()
        .map(|(&topic, counts)| {
            let w = counts
                .iter()
                .map(|(term, &count)| {
                    let f = term_totals[term] as f64;
                    (term.clone(), count as f64 * (1.0 + avg_tokens / f).ln())
                })
                .collect();
            (topic, w)
        })
        .collect();

    Ok(CtfidfWeights {
        topics: topics.into_iter().collect(),
        tf,
        term_totals,
        avg_tokens,
        weights,
    })
}

impl CtfidfWeights {
    /// Topic labels, ascending.
    pub fn topics(&self) -> &[i64] {
        &self.topics
    }

    pub fn tf(&self, topic: i64, term: &str) -> u64 {
        self.tf.get(&topic).and_then(|m| m.get(term)).copied().unwrap_or(0)
    }

    /// `f(t)`: count of `term` across all topics.
    pub fn term_total(&self, term: &str) -> u64 {
        self.term_totals.get(term).copied().unwrap_or(0)
    }

    /// `A`: average number of tokens per topic.
    pub fn avg_tokens(&self) -> f64 {
        self.avg_tokens
    }

    pub fn weight(&self, topic: i64, term: &str) -> f64 {
        self.weights.get(&topic).and_then(|m| m.get(term)).copied().unwrap_or(0.0)
    }

    /// Scored terms of `topic`, in term order.
    pub fn topic_weights(&self, topic: i64) -> impl Iterator<Item = (&str, f64)> {
        self.weights
            .get(&topic)
            .into_iter()
            .flat_map(|m| m.iter().map(|(t, &w)| (t.as_str(), w)))
    }

    /// Terms kept after pruning.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.term_totals.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.term_totals.is_empty()
    }
}
