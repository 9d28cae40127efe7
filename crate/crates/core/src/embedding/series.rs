use std::sync::atomic::{AtomicUsize, Ordering};

use super::{cache_key, embed_texts, EmbedError, Embedding, EmbeddingBackend, EmbeddingStore, Pooling, Split};
use crate::features::{extract_feature_set, FeatureSet};
use crate::prompt::{build_ddp, build_fp, build_sdp, PromptKind, RenderConfig, SubPrompt};

/// Everything besides the backend that determines a series embedding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EmbedConfig {
    pub render: RenderConfig,
    pub pooling: Pooling,
    pub features: FeatureSet,
}

impl EmbedConfig {
    /// Canonical text form, hashed into cache keys.
    pub fn fingerprint(&self) -> String {
        format!(
            "precision={};separator={:?};pooling={};features={}",
            self.render.precision,
            self.render.value_separator,
            self.pooling.as_str(),
            self.features.names().join(",")
        )
    }
}

/// Prompts of one kind for a series, sized to the backend's budget.
pub fn build_prompts<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    values: &[f64],
    kind: PromptKind,
    cfg: &EmbedConfig,
) -> Result<Vec<SubPrompt>, EmbedError> {
    let budget = backend.info().max_tokens;
    let prompts = match kind {
        PromptKind::Sdp => build_sdp(values, &cfg.render, budget, backend)?,
        PromptKind::Ddp => build_ddp(values, &cfg.render, budget, backend)?,
        PromptKind::Fp => {
            let features = extract_feature_set(values, &cfg.features)?;
            build_fp(&features, &cfg.render, budget, backend)?
        }
    };
    Ok(prompts)
}

/// Prompt building, encoding, and pooling, uncached.
pub fn embed_series<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    values: &[f64],
    kind: PromptKind,
    cfg: &EmbedConfig,
) -> Result<Embedding, EmbedError> {
    let texts: Vec<String> = build_prompts(backend, values, kind, cfg)?.into_iter().map(|p| p.text).collect();
    let chunks = embed_texts(backend, &texts)?;
    cfg.pooling.pool(&chunks)
}

/// Identity of a series within a corpus, used for cache addressing.
#[derive(Debug, Clone, Copy)]
pub struct SeriesRef<'a> {
    pub dataset: &'a str,
    pub split: Split,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

/// Cached series embedding against one backend and configuration.
pub struct SeriesEmbedder<'a> {
    backend: &'a dyn EmbeddingBackend,
    store: Option<&'a dyn EmbeddingStore>,
    cfg: EmbedConfig,
    fingerprint: String,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<'a> SeriesEmbedder<'a> {
    pub fn new(backend: &'a dyn EmbeddingBackend, store: Option<&'a dyn EmbeddingStore>, cfg: EmbedConfig) -> Self {
        let fingerprint = cfg.fingerprint();
        SeriesEmbedder { backend, store, cfg, fingerprint, hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn config(&self) -> &EmbedConfig {
        &self.cfg
    }

    pub fn backend(&self) -> &dyn EmbeddingBackend {
        self.backend
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats { hits: self.hits.load(Ordering::Relaxed), misses: self.misses.load(Ordering::Relaxed) }
    }

    pub fn embed(&self, id: SeriesRef<'_>, values: &[f64], kind: PromptKind) -> Result<Embedding, EmbedError> {
        let Some(store) = self.store else {
            self.misses.fetch_add(1, Ordering::Relaxed);
            return embed_series(self.backend, values, kind, &self.cfg);
        };
        let key = cache_key(id.dataset, id.split, id.index, kind, &self.backend.info().model_name, &self.fingerprint);
        if let Some(hit) = store.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let fresh = embed_series(self.backend, values, kind, &self.cfg)?;
        store.put(&key, &fresh)?;
        Ok(fresh)
    }
}
