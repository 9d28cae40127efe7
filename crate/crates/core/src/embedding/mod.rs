//! Text embeddings: backends, pooling, fusion, and the on-disk cache.

mod cache;
mod http;
mod instrument;
mod mock;
mod series;

use thiserror::Error;

use crate::features::FeatureError;
use crate::prompt::{CountError, PromptError, PromptKind, TokenCounter};

pub use cache::{cache_key, DiskCache, EmbeddingStore, MemoryCache, Split};
pub use http::{HttpBackend, RetryPolicy};
pub use instrument::{InstrumentedBackend, Usage};
pub use mock::{mock_embed, mock_token_count, MockBackend, MOCK_SPECIAL_TOKENS};
pub use series::{embed_series, CacheStats, EmbedConfig, SeriesEmbedder, SeriesRef};

/// Checkpoints with a published input limit. A remote backend claiming one of
/// these names must advertise the matching limit.
pub const KNOWN_MODELS: [(&str, usize); 2] = [("bert-base-uncased", 512), ("longformer-base-4096", 4096)];

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("text {index} needs {tokens} tokens, backend accepts at most {max}")]
    OverBudget { index: usize, tokens: usize, max: usize },
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend rejected the request ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("backend protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Count(#[from] CountError),
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("cannot pool an empty list of embeddings")]
    EmptyPool,
    #[error("embedding dimensions differ ({expected} vs {found})")]
    MixedDimensions { expected: usize, found: usize },
    #[error("nothing to fuse")]
    EmptyFusion,
    #[error("prompt kind {0} appears twice in a fusion")]
    DuplicateKind(PromptKind),
    #[error("embedding has a non-finite component")]
    NonFinite,
    #[error("cache write failed: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BackendInfo {
    #[serde(rename = "model")]
    pub model_name: String,
    pub max_tokens: usize,
    pub dimension: usize,
}

impl BackendInfo {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_tokens == 0 || self.dimension == 0 {
            return Err(BackendError::Protocol(format!(
                "{}: max_tokens and dimension must be positive",
                self.model_name
            )));
        }
        if let Some((_, limit)) = KNOWN_MODELS.iter().find(|(m, _)| *m == self.model_name) {
            if *limit != self.max_tokens {
                return Err(BackendError::Protocol(format!(
                    "{} advertises max_tokens {}, expected {limit}",
                    self.model_name, self.max_tokens
                )));
            }
        }
        Ok(())
    }
}

/// A dense real vector with finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(vector: Vec<f64>) -> Result<Self, EmbedError> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Embedding(vector))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Unit L2 norm; the zero vector is returned unchanged.
    pub fn l2_normalized(&self) -> Embedding {
        let norm = self.0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return self.clone();
        }
        Embedding(self.0.iter().map(|v| v / norm).collect())
    }
}

/// A text encoder. Implementations must be deterministic for a given text
/// and safe to call from several threads at once.
pub trait EmbeddingBackend: TokenCounter + Send + Sync {
    fn info(&self) -> &BackendInfo;

    /// Embeds texts the caller has already checked against the budget.
    /// Use [`embed_texts`] for the checked entry point.
    fn embed_unchecked(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError>;
}

/// Embeds `texts` after verifying each fits the backend's token limit.
/// Over-budget input fails before anything is sent for encoding.
pub fn embed_texts<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    texts: &[String],
) -> Result<Vec<Embedding>, BackendError> {
    let max = backend.info().max_tokens;
    let counts = backend.count_tokens_batch(texts)?;
    if let Some((index, &tokens)) = counts.iter().enumerate().find(|(_, &c)| c > max) {
        return Err(BackendError::OverBudget { index, tokens, max });
    }
    let out = backend.embed_unchecked(texts)?;
    if out.len() != texts.len() {
        return Err(BackendError::Protocol(format!("sent {} texts, got {} embeddings", texts.len(), out.len())));
    }
    let dim = backend.info().dimension;
    if let Some(e) = out.iter().find(|e| e.dim() != dim) {
        return Err(BackendError::Protocol(format!("expected dimension {dim}, got {}", e.dim())));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Pooling {
    #[default]
    Mean,
    Max,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        }
    }

    pub fn pool(self, embeddings: &[Embedding]) -> Result<Embedding, EmbedError> {
        match self {
            Pooling::Mean => mean_pool(embeddings),
            Pooling::Max => max_pool(embeddings),
        }
    }
}

fn common_dim(embeddings: &[Embedding]) -> Result<usize, EmbedError> {
    let first = embeddings.first().ok_or(EmbedError::EmptyPool)?.dim();
    if let Some(e) = embeddings.iter().find(|e| e.dim() != first) {
        return Err(EmbedError::MixedDimensions { expected: first, found: e.dim() });
    }
    Ok(first)
}

/// Componentwise arithmetic mean.
pub fn mean_pool(embeddings: &[Embedding]) -> Result<Embedding, EmbedError> {
    let dim = common_dim(embeddings)?;
    if embeddings.len() == 1 {
        return Ok(embeddings[0].clone());
    }
    let n = embeddings.len() as f64;
    let mut acc = vec![0.0; dim];
    for e in embeddings {
        for (a, v) in acc.iter_mut().zip(&e.0) {
            *a += v;
        }
    }
    Ok(Embedding(acc.into_iter().map(|a| a / n).collect()))
}

/// Componentwise maximum.
pub fn max_pool(embeddings: &[Embedding]) -> Result<Embedding, EmbedError> {
    let dim = common_dim(embeddings)?;
    let mut acc = vec![f64::NEG_INFINITY; dim];
    for e in embeddings {
        for (a, v) in acc.iter_mut().zip(&e.0) {
            *a = a.max(*v);
        }
    }
    Ok(Embedding(acc))
}

/// Concatenates per-kind embeddings in canonical kind order (SDP, DDP, FP),
/// whatever order they are given in.
pub fn fuse(parts: &[(PromptKind, Embedding)]) -> Result<Embedding, EmbedError> {
    if parts.is_empty() {
        return Err(EmbedError::EmptyFusion);
    }
    let mut sorted: Vec<&(PromptKind, Embedding)> = parts.iter().collect();
    sorted.sort_by_key(|(k, _)| *k);
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(EmbedError::DuplicateKind(w[0].0));
    }
    Ok(Embedding(sorted.iter().flat_map(|(_, e)| e.0.iter().copied()).collect()))
}
