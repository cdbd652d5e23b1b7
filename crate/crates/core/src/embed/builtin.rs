use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::preprocess::word_tokens;

/// Size of the hashed feature space.
pub const HASH_BUCKETS: usize = 1 << 15;

const MIN_DIM: usize = 8;

/// Deterministic embedder: feature-hashed log term counts followed by a
/// seeded Gaussian random projection, L2-normalized.
///
/// Projection columns are generated per hash bucket from `(seed, bucket)`
/// and memoized, so the full matrix is never built.
#[derive(Debug)]
pub struct BuiltinEmbedder {
    dim: usize,
    seed: u64,
    columns: RwLock<HashMap<u32, Arc<[f32]>>>,
}

impl BuiltinEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if dim < MIN_DIM {
            return Err(EmbedError::Config(format!("builtin embedder needs dim >= {MIN_DIM}, got {dim}")));
        }
        Ok(Self {
            dim,
            seed,
            columns: RwLock::new(HashMap::new()),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn column(&self, bucket: u32) -> Arc<[f32]> {
        if let Some(col) = self.columns.read().expect("column cache poisoned").get(&bucket) {
            return Arc::clone(col);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (bucket as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let col: Arc<[f32]> = (0..self.dim)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                x as f32
            })
            .collect();
        self.columns
            .write()
            .expect("column cache poisoned")
            .entry(bucket)
            .or_insert(col)
            .clone()
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        // BTreeMap keeps the summation order fixed.
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in word_tokens(text) {
            *counts.entry(bucket_of(&tok)).or_default() += 1;
        }
        if counts.is_empty() {
            return EmbeddingVector::zeros(self.dim);
        }
        let mut acc = vec![0.0f64; self.dim];
        for (bucket, count) in counts {
            let weight = (1.0 + count as f64).ln();
            let col = self.column(bucket);
            for (a, &c) in acc.iter_mut().zip(col.iter()) {
                *a += weight * c as f64;
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return EmbeddingVector::zeros(self.dim);
        }
        EmbeddingVector::new(acc.iter().map(|v| (v / norm) as f32).collect())
            .expect("normalized finite values")
    }
}

impl EmbeddingProvider for BuiltinEmbedder {
    fn name(&self) -> String {
        format!("builtin-d{}-s{}", self.dim, self.seed)
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn bucket_of(token: &str) -> u32 {
    (fnv1a(token.as_bytes()) % HASH_BUCKETS as u64) as u32
}

/// One-shot form of [`BuiltinEmbedder::embed_batch`].
pub fn builtin_embed_batch(texts: &[String], dim: usize, seed: u64) -> Result<Vec<EmbeddingVector>, EmbedError> {
    BuiltinEmbedder::new(dim, seed)?.embed_batch(texts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::cosine_similarity;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn unit_norm_and_self_cosine() {
        let v = builtin_embed_batch(&["a b".into(), "a b c".into(), "gradle build".into()], 64, 42).unwrap();
        // single-letter tokens are dropped, so the first two texts are empty
        assert!(v[0].is_zero() && v[1].is_zero());
        assert!((v[2].norm() - 1.0).abs() < 1e-6);
        assert!((cosine_similarity(&v[2], &v[2]).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_text_is_zero() {
        let v = builtin_embed_batch(&["".into(), "123 !!".into()], 16, 1).unwrap();
        assert!(v.iter().all(EmbeddingVector::is_zero));
    }

    #[test]
    fn rejects_small_dim() {
        assert!(BuiltinEmbedder::new(4, 0).is_err());
    }

    fn random_word(rng: &mut impl Rng) -> String {
        (0..rng.gen_range(3..9)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
    }

    #[test]
    fn deterministic_over_random_texts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let texts: Vec<String> = (0..1000)
            .map(|_| (0..rng.gen_range(0..12)).map(|_| random_word(&mut rng)).collect::<Vec<_>>().join(" "))
            .collect();
        let first = BuiltinEmbedder::new(32, 42).unwrap().embed_batch(&texts).unwrap();
        let second = BuiltinEmbedder::new(32, 42).unwrap().embed_batch(&texts).unwrap();
        for (a, b) in first.iter().zip(&second) {
            let bits = |v: &EmbeddingVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn disjoint_texts_are_nearly_orthogonal() {
        let embedder = BuiltinEmbedder::new(256, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let mut words: Vec<String> = (0..16).map(|i| format!("{}{}", random_word(&mut rng), "qxz".repeat(i % 2))).collect();
            words.sort();
            words.dedup();
            words.shuffle(&mut rng);
            let half = words.len() / 2;
            let a = words[..half].join(" ");
            let b = words[half..].join(" ");
            let v = embedder.embed_batch(&[a, b]).unwrap();
            worst = worst.max(cosine_similarity(&v[0], &v[1]).unwrap().abs());
        }
        assert!(worst < 0.3, "max |cosine| {worst}");
    }

    #[test]
    fn shared_tokens_score_higher_than_disjoint() {
        let embedder = BuiltinEmbedder::new(128, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut within = Vec::new();
        let mut across = Vec::new();
        for _ in 0..20 {
            let base: Vec<String> = (0..10).map(|_| random_word(&mut rng)).collect();
            let other: Vec<String> = (0..10).map(|_| format!("{}zz", random_word(&mut rng))).collect();
            // variants of `base` keep 6 of 10 tokens
            let variant = |rng: &mut ChaCha8Rng| {
                let mut kept: Vec<String> = base.choose_multiple(rng, 6).cloned().collect();
                kept.extend((0..4).map(|_| format!("{}yy", random_word(rng))));
                kept.join(" ")
            };
            let texts = vec![variant(&mut rng), variant(&mut rng), other.join(" ")];
            let v = embedder.embed_batch(&texts).unwrap();
            within.push(cosine_similarity(&v[0], &v[1]).unwrap());
            across.push(cosine_similarity(&v[0], &v[2]).unwrap());
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean(&within) > mean(&across), "{} vs {}", mean(&within), mean(&across));
    }
}
