//! Topic discovery: PCA reduction, clustering, class-based TF-IDF term
//! weighting and topic naming.

mod ctfidf;
mod dbscan;
mod kmeans;
mod model;
mod reduction;

pub use ctfidf::{compute_ctfidf, CtfidfWeights};
pub use dbscan::dbscan;
pub use kmeans::{kmeans, KMeansFit, MAX_ITERATIONS, MOVEMENT_TOLERANCE};
pub use model::{
    assign_nearest, build_topics, default_k, topic_centroid, Topic, TopicModelArtifact, TopicRecord, NAME_TERMS,
    REPRESENTATION_TERMS,
};
pub use reduction::{fit_reduction, ReductionModel};

use thiserror::Error;

/// Label given to documents outside every dense region.
pub const NOISE: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterAlgorithm {
    KMeans,
    Dbscan,
}

impl ClusterAlgorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterAlgorithm::KMeans => "kmeans",
            ClusterAlgorithm::Dbscan => "dbscan",
        }
    }
}

/// Cluster label per modeled document. Non-noise labels are `1..=T`,
/// numbered by descending cluster size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAssignment {
    pub labels: Vec<i64>,
    pub seed: u64,
    pub algorithm: ClusterAlgorithm,
}

impl TopicAssignment {
    pub fn topic_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != NOISE).max().copied().unwrap_or(0) as usize
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Indices of the documents labeled `topic`, ascending.
    pub fn members(&self, topic: i64) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == topic)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Renumbers cluster ids to `1..=T` by descending size; equal sizes keep
/// the order in which the clusters first appear. Noise stays noise.
pub fn relabel_by_size(raw: &[i64]) -> Vec<i64> {
    use std::collections::HashMap;
    let mut stats: HashMap<i64, (usize, usize)> = HashMap::new();
    for (i, &l) in raw.iter().enumerate() {
        if l == NOISE {
            continue;
        }
        let entry = stats.entry(l).or_insert((0, i));
        entry.0 += 1;
    }
    let mut order: Vec<(i64, usize, usize)> = stats.into_iter().map(|(l, (size, first))| (l, size, first)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let mapping: HashMap<i64, i64> = order
        .iter()
        .enumerate()
        .map(|(rank, (l, _, _))| (*l, rank as i64 + 1))
        .collect();
    raw.iter()
        .map(|l| if *l == NOISE { NOISE } else { mapping[l] })
        .collect()
}

pub(crate) fn check_matrix(vectors: &[Vec<f64>]) -> Result<usize, TopicsError> {
    let dim = vectors.first().map(Vec::len).ok_or(TopicsError::Empty)?;
    if dim == 0 {
        return Err(TopicsError::Empty);
    }
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(TopicsError::Dimension {
                row: i,
                expected: dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(TopicsError::NonFinite { row: i });
        }
    }
    Ok(dim)
}

/// Squared Euclidean distance.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("no vectors to work with")]
    Empty,
    #[error("row {row} has dimension {got}, expected {expected}")]
    Dimension { row: usize, expected: usize, got: usize },
    #[error("row {row} has a non-finite component")]
    NonFinite { row: usize },
    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{labels} labels for {docs} documents")]
    LabelCount { labels: usize, docs: usize },
    #[error("every document is noise; no topic to weight")]
    AllNoise,
    #[error("topic {0} has no members")]
    EmptyTopic(i64),
    #[error("centroid of topic {0} is the zero vector")]
    ZeroCentroid(i64),
}
