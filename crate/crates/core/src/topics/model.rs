use serde::{Deserialize, Serialize};

use super::{ClusterAlgorithm, CtfidfWeights, TopicAssignment, TopicsError, NOISE};
use crate::embed::cosine;

/// Terms in a topic's representation.
pub const REPRESENTATION_TERMS: usize = 10;
/// Leading representation terms joined into the topic name.
pub const NAME_TERMS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub id: i64,
    pub count: usize,
    /// Highest-weighted terms, weight descending then term ascending.
    pub top_terms: Vec<(String, f64)>,
    pub name: String,
}

impl Topic {
    pub fn representation(&self) -> Vec<&str> {
        self.top_terms.iter().map(|(t, _)| t.as_str()).collect()
    }
}

/// Builds one [`Topic`] per weighted class, ordered by member count
/// (ties: lower label first) and numbered `1..=T` in that order. For
/// size-ordered assignments the ids equal the labels.
pub fn build_topics(weights: &CtfidfWeights, labels: &TopicAssignment) -> Result<Vec<Topic>, TopicsError> {
    if weights.topics().is_empty() {
        return Err(TopicsError::AllNoise);
    }
    let mut topics: Vec<(i64, Topic)> = weights
        .topics()
        .iter()
        .map(|&label| {
            let mut terms: Vec<(String, f64)> = weights
                .topic_weights(label)
                .filter(|(_, w)| *w > 0.0)
                .map(|(t, w)| (t.to_string(), w))
                .collect();
            terms.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite weights").then_with(|| a.0.cmp(&b.0)));
            terms.truncate(REPRESENTATION_TERMS);
            let name = terms
                .iter()
                .take(NAME_TERMS)
                .map(|(t, _)| t.as_str())
                .collect::<Vec<_>>()
                .join("_");
            let count = labels.labels.iter().filter(|&&l| l == label).count();
            (
                label,
                Topic {
                    id: label,
                    count,
                    top_terms: terms,
                    name,
                },
            )
        })
        .collect();
    topics.sort_by(|a, b| b.1.count.cmp(&a.1.count).then(a.0.cmp(&b.0)));
    Ok(topics
        .into_iter()
        .enumerate()
        .map(|(rank, (_, mut topic))| {
            topic.id = rank as i64 + 1;
            topic
        })
        .collect())
}

/// Default cluster count when none is configured: `max(2, floor(sqrt(n / 2)))`.
pub fn default_k(n: usize) -> usize {
    (((n / 2) as f64).sqrt().floor() as usize).max(2)
}

/// Mean of the member vectors of `topic`.
pub fn topic_centroid(topic: i64, labels: &[i64], vectors: &[Vec<f64>]) -> Result<Vec<f64>, TopicsError> {
    if topic == NOISE {
        return Err(TopicsError::EmptyTopic(topic));
    }
    let members: Vec<&Vec<f64>> = labels
        .iter()
        .zip(vectors)
        .filter(|(&l, _)| l == topic)
        .map(|(_, v)| v)
        .collect();
    let first = members.first().ok_or(TopicsError::EmptyTopic(topic))?;
    let mut centroid = vec![0.0; first.len()];
    for v in &members {
        for (c, x) in centroid.iter_mut().zip(v.iter()) {
            *c += x;
        }
    }
    for c in &mut centroid {
        *c /= members.len() as f64;
    }
    Ok(centroid)
}

/// Topic whose centroid has the highest cosine with `vector`; ties go to
/// the lower id. Zero centroids have no direction and are rejected.
pub fn assign_nearest(vector: &[f64], centroids: &[(i64, Vec<f64>)]) -> Result<i64, TopicsError> {
    let mut sorted: Vec<&(i64, Vec<f64>)> = centroids.iter().collect();
    sorted.sort_by_key(|(id, _)| *id);
    let mut best: Option<(i64, f64)> = None;
    for (id, centroid) in sorted {
        if centroid.len() != vector.len() {
            return Err(TopicsError::Dimension {
                row: 0,
                expected: vector.len(),
                got: centroid.len(),
            });
        }
        if centroid.iter().all(|&x| x == 0.0) {
            return Err(TopicsError::ZeroCentroid(*id));
        }
        let sim = cosine(vector, centroid);
        if best.is_none_or(|(_, b)| sim > b) {
            best = Some((*id, sim));
        }
    }
    best.map(|(id, _)| id).ok_or(TopicsError::Empty)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub id: i64,
    pub count: usize,
    pub name: String,
    pub top_terms: Vec<(String, f64)>,
}

/// The `topics.json` artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelArtifact {
    pub algorithm: ClusterAlgorithm,
    pub seed: u64,
    pub target_dim: usize,
    pub labels: Vec<i64>,
    pub topics: Vec<TopicRecord>,
}

impl TopicModelArtifact {
    pub fn new(assignment: &TopicAssignment, target_dim: usize, topics: &[Topic]) -> Self {
        Self {
            algorithm: assignment.algorithm,
            seed: assignment.seed,
            target_dim,
            labels: assignment.labels.clone(),
            topics: topics
                .iter()
                .map(|t| TopicRecord {
                    id: t.id,
                    count: t.count,
                    name: t.name.clone(),
                    top_terms: t.top_terms.clone(),
                })
                .collect(),
        }
    }

    pub fn topics(&self) -> Vec<Topic> {
        self.topics
            .iter()
            .map(|r| Topic {
                id: r.id,
                count: r.count,
                top_terms: r.top_terms.clone(),
                name: r.name.clone(),
            })
            .collect()
    }

    pub fn assignment(&self) -> TopicAssignment {
        TopicAssignment {
            labels: self.labels.clone(),
            seed: self.seed,
            algorithm: self.algorithm,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::compute_ctfidf;

    fn assignment(labels: Vec<i64>) -> TopicAssignment {
        TopicAssignment {
            labels,
            seed: 0,
            algorithm: ClusterAlgorithm::KMeans,
        }
    }

    /// Documents where topic 1 ranks project > error > build > gradle > ...
    fn gradle_corpus() -> (Vec<Vec<String>>, TopicAssignment) {
        let t1 = [
            ("project", 12),
            ("error", 11),
            ("build", 10),
            ("gradl", 9),
            ("proguard", 8),
            ("studio", 7),
            ("librari", 6),
            ("file", 5),
            ("android", 4),
            ("eclips", 3),
            ("sdk", 2),
        ];
        let mut doc_a = Vec::new();
        let mut doc_b = Vec::new();
        for (term, count) in t1 {
            for i in 0..count {
                if i % 2 == 0 { doc_a.push(term.to_string()) } else { doc_b.push(term.to_string()) }
            }
        }
        let other = vec!["fragment".to_string(); 4];
        let docs = vec![doc_a, doc_b, other.clone(), other];
        (docs, assignment(vec![1, 1, 2, 2]))
    }

    #[test]
    fn names_from_top_four_terms() {
        let (docs, labels) = gradle_corpus();
        let weights = compute_ctfidf(&docs, &labels).unwrap();
        let topics = build_topics(&weights, &labels).unwrap();
        assert_eq!(topics[0].name, "project_error_build_gradl");
        assert_eq!(topics[0].top_terms.len(), REPRESENTATION_TERMS);
        assert_eq!(topics[1].name, "fragment");
    }

    #[test]
    fn topics_ordered_by_count() {
        let docs: Vec<Vec<String>> = (0..5).map(|_| vec!["aa".to_string(), "bb".to_string()]).collect();
        let labels = assignment(vec![2, 1, 2, 2, 1]);
        let weights = compute_ctfidf(&docs, &labels).unwrap();
        let topics = build_topics(&weights, &labels).unwrap();
        assert_eq!((topics[0].id, topics[0].count), (1, 3));
        assert_eq!((topics[1].id, topics[1].count), (2, 2));
    }

    #[test]
    fn ties_break_lexicographically() {
        let docs = vec![
            vec!["zeta".to_string(), "alpha".to_string()],
            vec!["zeta".to_string(), "alpha".to_string()],
        ];
        let labels = assignment(vec![1, 1]);
        let topics = build_topics(&compute_ctfidf(&docs, &labels).unwrap(), &labels).unwrap();
        assert_eq!(topics[0].representation(), vec!["alpha", "zeta"]);
        assert_eq!(topics[0].name, "alpha_zeta");
    }

    #[test]
    fn default_k_heuristic() {
        assert_eq!(default_k(1), 2);
        assert_eq!(default_k(8), 2);
        assert_eq!(default_k(18), 3);
        assert_eq!(default_k(300), 12);
    }

    #[test]
    fn centroid_of_single_member() {
        let c = topic_centroid(1, &[1], &[vec![0.25, -1.0]]).unwrap();
        assert_eq!(c, vec![0.25, -1.0]);
    }

    #[test]
    fn symmetric_pair_has_zero_centroid() {
        let c = topic_centroid(1, &[1, 1], &[vec![1.0, 2.0], vec![-1.0, -2.0]]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
        assert!(matches!(assign_nearest(&[1.0, 0.0], &[(1, c)]), Err(TopicsError::ZeroCentroid(1))));
    }

    #[test]
    fn empty_topic_is_an_error() {
        assert!(matches!(topic_centroid(3, &[1, 2], &[vec![0.0], vec![1.0]]), Err(TopicsError::EmptyTopic(3))));
    }

    #[test]
    fn nearest_prefers_lower_id_on_ties() {
        let centroids = vec![(2, vec![1.0, 0.0]), (1, vec![2.0, 0.0])];
        assert_eq!(assign_nearest(&[3.0, 0.0], &centroids).unwrap(), 1);
    }
}
