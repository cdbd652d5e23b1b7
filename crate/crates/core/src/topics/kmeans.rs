use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_matrix, relabel_by_size, squared_distance, ClusterAlgorithm, TopicAssignment, TopicsError};

pub const MAX_ITERATIONS: usize = 100;
/// Lloyd iterations stop once no centroid moves farther than this.
pub const MOVEMENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: TopicAssignment,
    /// Centroids in label order: `centroids[l - 1]` belongs to label `l`.
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each iteration.
    pub objective_history: Vec<f64>,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        self.objective_history.last().copied().unwrap_or(0.0)
    }
}

/// Seeded k-means++ initialization followed by Lloyd iterations.
///
/// An empty cluster is re-seeded with the point farthest from its current
/// centroid (taken from a cluster with more than one member). The
/// objective is checked to be non-increasing after every iteration.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit, TopicsError> {
    check_matrix(vectors)?;
    let n = vectors.len();
    if k == 0 {
        return Err(TopicsError::Parameter("k must be positive".into()));
    }
    if k > n {
        return Err(TopicsError::TooFewVectors { needed: k, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(vectors, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut history: Vec<f64> = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut dists = vec![0.0; n];
        for (i, v) in vectors.iter().enumerate() {
            let (best, d) = nearest(v, &centroids);
            labels[i] = best;
            dists[i] = d;
        }
        reseed_empty(vectors, &mut centroids, &mut labels, &mut dists, k);

        let updated = means(vectors, &labels, &centroids, k);
        let movement = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;

        let objective: f64 = vectors
            .iter()
            .zip(&labels)
            .map(|(v, &l)| squared_distance(v, &centroids[l]))
            .sum();
        if let Some(&prev) = history.last() {
            assert!(
                objective <= prev + 1e-9 * (1.0 + prev),
                "k-means objective increased from {prev} to {objective}"
            );
        }
        history.push(objective);
        if movement < MOVEMENT_TOLERANCE {
            break;
        }
    }

    let raw: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
    let relabeled = relabel_by_size(&raw);
    let mut ordered = vec![Vec::new(); k];
    for (old, new) in raw.iter().zip(&relabeled) {
        ordered[(*new - 1) as usize] = centroids[*old as usize].clone();
    }
    Ok(KMeansFit {
        assignment: TopicAssignment {
            labels: relabeled,
            seed,
            algorithm: ClusterAlgorithm::KMeans,
        },
        centroids: ordered,
        objective_history: history,
    })
}

fn plus_plus_init(vectors: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut best: Vec<f64> = vectors.iter().map(|v| squared_distance(v, &vectors[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in best.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the final sum
            pick.unwrap_or_else(|| best.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            // every point coincides with a centre: take the first unused index
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (b, v) in best.iter_mut().zip(vectors) {
            *b = b.min(squared_distance(v, &vectors[next]));
        }
    }
    chosen.into_iter().map(|i| vectors[i].clone()).collect()
}

/// Nearest centroid (lowest index on ties) and its squared distance.
fn nearest(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(v, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn reseed_empty(vectors: &[Vec<f64>], centroids: &mut [Vec<f64>], labels: &mut [usize], dists: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..vectors.len() {
            if sizes[labels[i]] > 1 && far.is_none_or(|f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        sizes[labels[i]] -= 1;
        sizes[c] = 1;
        labels[i] = c;
        dists[i] = 0.0;
        centroids[c] = vectors[i].clone();
    }
}

fn means(vectors: &[Vec<f64>], labels: &[usize], previous: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let dim = vectors[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (v, &l) in vectors.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(v) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(c, (s, count))| {
            if count == 0 {
                previous[c].clone()
            } else {
                s.into_iter().map(|x| x / count as f64).collect()
            }
        })
        .collect()
}
