//! Dense text embeddings behind a provider contract.
//!
//! Two providers exist: [`BuiltinEmbedder`], a deterministic hashed
//! random projection that needs no model, and [`HttpEmbedder`], a client
//! for an external embedding service. [`CachedEmbedder`] puts either one
//! behind the persistent [`EmbeddingCache`].

mod builtin;
mod cache;
mod http;

pub use builtin::{builtin_embed_batch, BuiltinEmbedder, HASH_BUCKETS};
pub use cache::{CacheStats, CachedEmbedder, EmbeddingCache};
pub use http::{http_embed_batch, HttpEmbedder, RetryPolicy};

use thiserror::Error;

/// Default number of texts per provider call.
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Fails on an empty or non-finite vector.
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::InvalidVector("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidVector("non-finite component".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Something that turns texts into vectors, one per text, in input order.
/// The same provider must map the same text to the same vector.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the provider and its configuration in cache keys.
    fn name(&self) -> String;

    /// Output dimension, if already known.
    fn dim(&self) -> Option<usize>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Embeds arbitrarily many texts; implemented by every provider and by the
/// caching wrapper.
pub trait TextEmbedder {
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

impl<P: EmbeddingProvider + ?Sized> TextEmbedder for P {
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(DEFAULT_BATCH_SIZE) {
            out.extend(self.embed_batch(chunk)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("{endpoint}: transport failure after {attempts} attempt(s): {message}")]
    Transport {
        endpoint: String,
        attempts: u32,
        message: String,
    },
    #[error("{endpoint}: HTTP status {status}: {message}")]
    Status {
        endpoint: String,
        status: u16,
        message: String,
    },
    #[error("{endpoint}: expected vectors of dim {expected}, got {got}")]
    DimMismatch {
        endpoint: String,
        expected: usize,
        got: usize,
    },
    #[error("{endpoint}: sent {expected} texts but received {got} vectors")]
    CountMismatch {
        endpoint: String,
        expected: usize,
        got: usize,
    },
    #[error("{endpoint}: malformed response: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("invalid embedding: {0}")]
    InvalidVector(String),
    #[error("invalid embedder configuration: {0}")]
    Config(String),
    #[error("embedding cache {path}: {message}")]
    Cache { path: String, message: String },
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::Dimension {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(cosine(&a.to_f64(), &b.to_f64()))
}

/// Cosine similarity of equal-length slices, clamped to [-1, 1]; 0 when
/// either side is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_examples() {
        let a = v(&[0.6, 0.8]);
        let neg = v(&[-0.6, -0.8]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn cosine_with_zero_is_zero() {
        assert_eq!(cosine_similarity(&v(&[1.0, 2.0]), &EmbeddingVector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn cosine_dimension_mismatch() {
        assert!(matches!(
            cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])),
            Err(EmbedError::Dimension { left: 1, right: 2 })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(EmbeddingVector::new(vec![f32::NAN]).is_err());
    }
}
