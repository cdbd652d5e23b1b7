use std::collections::VecDeque;

use super::{check_matrix, relabel_by_size, squared_distance, ClusterAlgorithm, TopicAssignment, TopicsError, NOISE};

const UNVISITED: i64 = -2;

/// Density-based clustering with Euclidean distance.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Points are visited in ascending index order and clusters
/// grow breadth-first with neighbours in ascending order, so a border
/// point reachable from two clusters joins the one discovered first.
/// Labels are renumbered by descending cluster size.
pub fn dbscan(vectors: &[Vec<f64>], eps: f64, min_pts: usize, seed: u64) -> Result<TopicAssignment, TopicsError> {
    check_matrix(vectors)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(TopicsError::Parameter(format!("eps must be positive, got {eps}")));
    }
    if min_pts < 2 {
        return Err(TopicsError::Parameter(format!("min_pts must be at least 2, got {min_pts}")));
    }
    let n = vectors.len();
    let eps2 = eps * eps;
    let region = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| squared_distance(&vectors[i], &vectors[j]) <= eps2)
            .collect()
    };

    let mut labels = vec![UNVISITED; n];
    let mut next_cluster = 0i64;
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        let neighbours = region(i);
        if neighbours.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[i] = cluster;
        let mut queue: VecDeque<usize> = neighbours.into_iter().filter(|&j| j != i).collect();
        while let Some(q) = queue.pop_front() {
            if labels[q] == NOISE {
                labels[q] = cluster;
                continue;
            }
            if labels[q] != UNVISITED {
                continue;
            }
            labels[q] = cluster;
            let expansion = region(q);
            if expansion.len() >= min_pts {
                queue.extend(expansion.into_iter().filter(|&j| labels[j] == UNVISITED || labels[j] == NOISE));
            }
        }
    }

    Ok(TopicAssignment {
        labels: relabel_by_size(&labels),
        seed,
        algorithm: ClusterAlgorithm::Dbscan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_blobs_and_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut points = Vec::new();
        for centre in [(0.0, 0.0), (5.0, 5.0)] {
            for _ in 0..30 {
                points.push(vec![centre.0 + rng.gen_range(-0.3..0.3), centre.1 + rng.gen_range(-0.3..0.3)]);
            }
        }
        for k in 0..5 {
            points.push(vec![20.0 + 10.0 * k as f64, -20.0]);
        }
        let out = dbscan(&points, 0.5, 4, 0).unwrap();
        assert_eq!(out.topic_count(), 2);
        assert_eq!(out.noise_count(), 5);
        assert!(out.labels[60..].iter().all(|&l| l == NOISE));
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let points = vec![vec![0.5, 0.5]; 6];
        let out = dbscan(&points, 0.1, 3, 0).unwrap();
        assert_eq!(out.labels, vec![1; 6]);
    }

    #[test]
    fn tiny_eps_gives_all_noise() {
        let points: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 0.0]).collect();
        let out = dbscan(&points, 0.5, 2, 0).unwrap();
        assert!(out.labels.iter().all(|&l| l == NOISE));
    }

    #[test]
    fn rejects_bad_parameters() {
        let points = vec![vec![0.0]];
        assert!(dbscan(&points, 0.0, 2, 0).is_err());
        assert!(dbscan(&points, 1.0, 1, 0).is_err());
    }
}
