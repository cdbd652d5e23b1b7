use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::RwLock;

use super::{EmbedError, EmbeddingProvider, EmbeddingVector, TextEmbedder, DEFAULT_BATCH_SIZE};
use crate::util::{sha256, write_atomically};

type CacheKey = (String, [u8; 32]);

/// Embeddings keyed by (provider name, SHA-256 of the text).
///
/// On disk a cache is a plain concatenation of records:
///
/// ```text
/// u32 LE  provider-name length n
/// n bytes provider name (UTF-8)
/// 32 bytes SHA-256 of the text
/// u32 LE  dim
/// dim x f32 LE
/// ```
///
/// Records are written sorted by key so equal contents give equal bytes.
/// Reads take a shared lock and inserts an exclusive one.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<CacheKey, EmbeddingVector>>,
    dirty: AtomicBool,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

impl EmbeddingCache {
    /// A cache that never touches the disk.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the cache backed by `path`, loading existing records.
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        let entries = if path.exists() {
            let bytes = fs::read(path).map_err(|e| cache_err(path, e.to_string()))?;
            decode(&bytes).map_err(|m| cache_err(path, m))?
        } else {
            HashMap::new()
        };
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries: RwLock::new(entries),
            ..Default::default()
        })
    }

    pub fn get(&self, provider: &str, text: &str) -> Option<EmbeddingVector> {
        let key = (provider.to_string(), sha256(text.as_bytes()));
        self.entries.read().expect("cache lock poisoned").get(&key).cloned()
    }

    pub fn insert(&self, provider: &str, text: &str, vector: EmbeddingVector) {
        let key = (provider.to_string(), sha256(text.as_bytes()));
        self.entries.write().expect("cache lock poisoned").insert(key, vector);
        self.dirty.store(true, Ordering::Release);
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.len(),
        }
    }

    /// Writes the cache file if anything was inserted since opening.
    pub fn flush(&self) -> Result<(), EmbedError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if !self.dirty.load(Ordering::Acquire) {
            return Ok(());
        }
        let entries = self.entries.read().expect("cache lock poisoned");
        let sorted: BTreeMap<&CacheKey, &EmbeddingVector> = entries.iter().collect();
        write_atomically(path, |f| {
            let mut w = BufWriter::new(f);
            for ((name, hash), vector) in sorted {
                encode_record(&mut w, name, hash, vector)?;
            }
            w.flush()
        })
        .map_err(|e| cache_err(path, e.to_string()))?;
        self.dirty.store(false, Ordering::Release);
        Ok(())
    }
}

fn cache_err(path: &Path, message: String) -> EmbedError {
    EmbedError::Cache {
        path: path.display().to_string(),
        message,
    }
}

fn encode_record<W: Write>(w: &mut W, name: &str, hash: &[u8; 32], vector: &EmbeddingVector) -> io::Result<()> {
    w.write_all(&(name.len() as u32).to_le_bytes())?;
    w.write_all(name.as_bytes())?;
    w.write_all(hash)?;
    w.write_all(&(vector.dim() as u32).to_le_bytes())?;
    for v in vector.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn decode(bytes: &[u8]) -> Result<HashMap<CacheKey, EmbeddingVector>, String> {
    let mut out = HashMap::new();
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], String> {
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| format!("truncated record at byte {pos}"))?;
        let slice = &bytes[*pos..end];
        *pos = end;
        Ok(slice)
    };
    let read_u32 = |pos: &mut usize| -> Result<u32, String> {
        Ok(u32::from_le_bytes(take(pos, 4)?.try_into().expect("4 bytes")))
    };
    while pos < bytes.len() {
        let start = pos;
        let name_len = read_u32(&mut pos)? as usize;
        let name = std::str::from_utf8(take(&mut pos, name_len)?)
            .map_err(|_| format!("provider name at byte {start} is not UTF-8"))?
            .to_string();
        let hash: [u8; 32] = take(&mut pos, 32)?.try_into().expect("32 bytes");
        let dim = read_u32(&mut pos)? as usize;
        let raw = take(&mut pos, dim.checked_mul(4).ok_or("dimension overflow")?)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let vector = EmbeddingVector::new(values).map_err(|e| format!("record at byte {start}: {e}"))?;
        out.insert((name, hash), vector);
    }
    Ok(out)
}

/// A provider seen through a cache: only texts missing from the cache reach
/// the provider, in batches.
pub struct CachedEmbedder<'a> {
    provider: &'a dyn EmbeddingProvider,
    cache: &'a EmbeddingCache,
    batch_size: usize,
}

impl<'a> CachedEmbedder<'a> {
    pub fn new(provider: &'a dyn EmbeddingProvider, cache: &'a EmbeddingCache) -> Self {
        Self {
            provider,
            cache,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }
}

impl TextEmbedder for CachedEmbedder<'_> {
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let name = self.provider.name();
        let mut found: Vec<Option<EmbeddingVector>> = texts.iter().map(|t| self.cache.get(&name, t)).collect();

        let mut missing: Vec<String> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (text, hit) in texts.iter().zip(&found) {
            if hit.is_none() && seen.insert(text.as_str()) {
                missing.push(text.clone());
            }
        }
        let hits = found.iter().filter(|f| f.is_some()).count() as u64;
        self.cache.hits.fetch_add(hits, Ordering::Relaxed);
        self.cache.misses.fetch_add(texts.len() as u64 - hits, Ordering::Relaxed);

        for chunk in missing.chunks(self.batch_size) {
            let vectors = self.provider.embed_batch(chunk)?;
            if vectors.len() != chunk.len() {
                return Err(EmbedError::CountMismatch {
                    endpoint: name.clone(),
                    expected: chunk.len(),
                    got: vectors.len(),
                });
            }
            for (text, vector) in chunk.iter().zip(vectors) {
                self.cache.insert(&name, text, vector);
            }
        }
        for (slot, text) in found.iter_mut().zip(texts) {
            if slot.is_none() {
                *slot = self.cache.get(&name, text);
            }
        }
        Ok(found.into_iter().map(|v| v.expect("every text embedded")).collect())
    }
}
