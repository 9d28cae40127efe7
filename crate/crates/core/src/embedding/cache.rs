//! Content-addressed embedding cache.
//!
//! Each entry is one file named by its key: a little-endian `u32` dimension
//! followed by that many little-endian `f64` components. Writes go to a
//! temporary file that is renamed into place, so readers never observe a
//! partial record and concurrent writers of one key are harmless.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::Embedding;
use crate::prompt::PromptKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "TRAIN",
            Split::Test => "TEST",
        })
    }
}

/// Stable key for one series embedding. Every field, including the
/// rendering/pooling fingerprint `config`, feeds the digest.
pub fn cache_key(
    dataset: &str,
    split: Split,
    series_index: usize,
    kind: PromptKind,
    model_name: &str,
    config: &str,
) -> String {
    let mut h = Sha256::new();
    let index = series_index.to_string();
    let split = split.to_string();
    for field in ["lamper-cache-v1", dataset, &split, &index, kind.as_str(), model_name, config] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub trait EmbeddingStore: Send + Sync {
    fn get(&self, key: &str) -> Option<Embedding>;
    fn put(&self, key: &str, embedding: &Embedding) -> io::Result<()>;
}

#[derive(Debug, Default)]
pub struct MemoryCache {
    entries: Mutex<HashMap<String, Embedding>>,
}

impl MemoryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl EmbeddingStore for MemoryCache {
    fn get(&self, key: &str) -> Option<Embedding> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    fn put(&self, key: &str, embedding: &Embedding) -> io::Result<()> {
        self.entries.lock().expect("cache lock").insert(key.to_string(), embedding.clone());
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.emb"))
    }
}

pub(crate) fn encode(embedding: &Embedding) -> Vec<u8> {
    let v = embedding.as_slice();
    let mut out = Vec::with_capacity(4 + 8 * v.len());
    out.extend_from_slice(&(v.len() as u32).to_le_bytes());
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Option<Embedding> {
    let (head, rest) = bytes.split_first_chunk::<4>()?;
    let dim = u32::from_le_bytes(*head) as usize;
    if rest.len() != dim * 8 {
        return None;
    }
    let v = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Embedding::new(v).ok()
}

impl EmbeddingStore for DiskCache {
    /// Unreadable or malformed records count as misses.
    fn get(&self, key: &str) -> Option<Embedding> {
        decode(&fs::read(self.path(key)).ok()?)
    }

    fn put(&self, key: &str, embedding: &Embedding) -> io::Result<()> {
        let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        fs::write(&tmp, encode(embedding))?;
        fs::rename(&tmp, self.path(key)).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }
}
