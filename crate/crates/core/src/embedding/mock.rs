use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{BackendError, BackendInfo, Embedding, EmbeddingBackend};
use crate::prompt::{CountError, TokenCounter};

/// Begin/end markers charged by the mock tokenizer.
pub const MOCK_SPECIAL_TOKENS: usize = 2;

/// Mock tokenizer: two special tokens plus one per whitespace-delimited piece.
pub fn mock_token_count(text: &str) -> usize {
    MOCK_SPECIAL_TOKENS + text.split_whitespace().count()
}

/// Deterministic unit-norm pseudo-embedding of `text`.
///
/// A SHA-256 digest of `(seed, text)` is folded to 64 bits and seeds a
/// ChaCha8 stream; each component is a uniform draw in `[-1, 1)` and the
/// vector is then scaled to unit length.
pub fn mock_embed(text: &str, dimension: usize, seed: u64) -> Embedding {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(head));

    let dimension = dimension.max(1);
    loop {
        let v: Vec<f64> = (0..dimension)
            .map(|_| ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0)
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Embedding(v.into_iter().map(|x| x / norm).collect());
        }
    }
}

/// In-process stand-in for a language-model server.
#[derive(Debug, Clone)]
pub struct MockBackend {
    info: BackendInfo,
    seed: u64,
}

impl MockBackend {
    pub fn new(dimension: usize, seed: u64) -> Self {
        Self::with_max_tokens(dimension, seed, 512)
    }

    pub fn with_max_tokens(dimension: usize, seed: u64, max_tokens: usize) -> Self {
        let dimension = dimension.max(1);
        MockBackend {
            info: BackendInfo {
                model_name: format!("mock-d{dimension}-s{seed}-t{max_tokens}"),
                max_tokens,
                dimension,
            },
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl TokenCounter for MockBackend {
    fn count_tokens(&self, text: &str) -> Result<usize, CountError> {
        Ok(mock_token_count(text))
    }
}

impl EmbeddingBackend for MockBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn embed_unchecked(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        Ok(texts.iter().map(|t| mock_embed(t, self.info.dimension, self.seed)).collect())
    }
}
