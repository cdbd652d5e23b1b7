use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_matrix, TopicsError};

/// Principal-component projection fitted on a set of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionModel {
    pub mean: Vec<f64>,
    /// Orthonormal principal axes, by descending explained variance.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component.
    pub variances: Vec<f64>,
    /// Dimension actually produced; below the request when the data's rank is.
    pub target_dim: usize,
    /// Set when the requested dimension had to be reduced.
    pub warning: Option<String>,
}

impl ReductionModel {
    pub fn transform(&self, v: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(v.iter().zip(&self.mean)).map(|(ci, (x, m))| ci * (x - m)).sum())
            .collect()
    }

    pub fn transform_all(&self, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
        vectors.iter().map(|v| self.transform(v)).collect()
    }

    /// Maps reduced coordinates back to the input space.
    pub fn inverse_transform(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &zi) in self.components.iter().zip(z) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += zi * ci;
            }
        }
        out
    }
}

/// Exact PCA through a symmetric eigendecomposition of the sample
/// covariance. Each component is signed so that its largest-magnitude
/// entry is positive.
pub fn fit_reduction(vectors: &[Vec<f64>], target_dim: usize) -> Result<ReductionModel, TopicsError> {
    let dim = check_matrix(vectors)?;
    let n = vectors.len();
    if target_dim < 2 {
        return Err(TopicsError::Parameter(format!("target_dim must be at least 2, got {target_dim}")));
    }
    if n < target_dim {
        return Err(TopicsError::TooFewVectors { needed: target_dim, got: n });
    }

    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| vectors[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / ((n - 1).max(1) as f64);
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let largest = eigen.eigenvalues[order[0]].max(0.0);
    let tolerance = largest * dim as f64 * f64::EPSILON * 16.0;
    let rank = order.iter().filter(|&&i| eigen.eigenvalues[i] > tolerance).count();

    let mut warning = None;
    let effective = if target_dim > rank {
        let reduced = rank.max(1);
        warning = Some(format!("requested {target_dim} components but data rank is {rank}; using {reduced}"));
        reduced
    } else {
        target_dim
    };

    let mut components = Vec::with_capacity(effective);
    let mut variances = Vec::with_capacity(effective);
    for &idx in order.iter().take(effective) {
        let mut axis: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut axis {
            *x /= norm;
        }
        let pivot = axis
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
            .0;
        if axis[pivot] < 0.0 {
            for x in &mut axis {
                *x = -*x;
            }
        }
        components.push(axis);
        variances.push(eigen.eigenvalues[idx].max(0.0));
    }

    Ok(ReductionModel {
        mean,
        components,
        variances,
        target_dim: effective,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn components_are_orthonormal_and_signed() {
        let data = random_matrix(60, 12, 1);
        let model = fit_reduction(&data, 6).unwrap();
        for (i, a) in model.components.iter().enumerate() {
            assert!((dot(a, a) - 1.0).abs() < 1e-8);
            for b in &model.components[i + 1..] {
                assert!(dot(a, b).abs() < 1e-8);
            }
            let pivot = a.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn recovers_a_plane_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let offset: Vec<f64> = (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let data: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                (0..10).map(|j| offset[j] + a * u[j] + b * w[j]).collect()
            })
            .collect();
        let model = fit_reduction(&data, 2).unwrap();
        assert!(model.warning.is_none());
        for v in &data {
            let back = model.inverse_transform(&model.transform(v));
            let err = back.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-8, "reconstruction error {err}");
        }
    }

    #[test]
    fn rank_deficient_request_is_reduced() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, 0.0]).collect();
        let model = fit_reduction(&data, 3).unwrap();
        assert_eq!(model.target_dim, 1);
        assert!(model.warning.is_some());
    }

    #[test]
    fn full_dimension_is_an_isometry() {
        let data = random_matrix(30, 8, 3);
        let model = fit_reduction(&data, 8).unwrap();
        let z = model.transform_all(&data);
        for i in 0..data.len() {
            for j in i + 1..data.len() {
                let d0 = super::super::squared_distance(&data[i], &data[j]).sqrt();
                let d1 = super::super::squared_distance(&z[i], &z[j]).sqrt();
                assert!((d0 - d1).abs() < 1e-8);
            }
        }
    }

    /// Power iteration with deflation, independent of the eigensolver used
    /// by `fit_reduction`.
    fn power_eigenvalues(cov: &[Vec<f64>], count: usize) -> Vec<f64> {
        let d = cov.len();
        let mut a: Vec<Vec<f64>> = cov.to_vec();
        let mut out = Vec::new();
        for k in 0..count {
            let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + k * 3) % 5) as f64).collect();
            let mut lambda = 0.0;
            for _ in 0..5000 {
                let w: Vec<f64> = (0..d).map(|i| dot(&a[i], &v)).collect();
                let norm = dot(&w, &w).sqrt();
                v = w.iter().map(|x| x / norm).collect();
                lambda = norm;
            }
            for i in 0..d {
                for j in 0..d {
                    a[i][j] -= lambda * v[i] * v[j];
                }
            }
            out.push(lambda);
        }
        out
    }

    #[test]
    fn variances_match_power_iteration_and_decrease() {
        let data = random_matrix(100, 16, 4);
        let model = fit_reduction(&data, 5).unwrap();
        let n = data.len() as f64;
        let mean: Vec<f64> = (0..16).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let cov: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                (0..16)
                    .map(|j| data.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0))
                    .collect()
            })
            .collect();
        let oracle = power_eigenvalues(&cov, 5);
        let z = model.transform_all(&data);
        let projected: Vec<f64> = (0..5)
            .map(|c| z.iter().map(|r| r[c] * r[c]).sum::<f64>() / (n - 1.0))
            .collect();
        for c in 0..5 {
            assert!((projected[c] - oracle[c]).abs() < 1e-6, "{c}: {} vs {}", projected[c], oracle[c]);
            if c > 0 {
                assert!(projected[c - 1] >= projected[c]);
            }
        }
    }

    #[test]
    fn rejects_bad_targets() {
        let data = random_matrix(3, 4, 5);
        assert!(fit_reduction(&data, 1).is_err());
        assert!(matches!(fit_reduction(&data, 4), Err(TopicsError::TooFewVectors { .. })));
    }
}
