use std::sync::atomic::{AtomicUsize, Ordering};

use super::{BackendError, BackendInfo, Embedding, EmbeddingBackend};
use crate::prompt::{CountError, TokenCounter};

/// Snapshot of what an [`InstrumentedBackend`] has seen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub count_requests: usize,
    pub embed_requests: usize,
    pub texts_embedded: usize,
    /// Largest token count of any text submitted for embedding.
    pub max_tokens_submitted: usize,
    /// Most requests in flight at once.
    pub peak_in_flight: usize,
}

/// Wraps a backend and records request counts, concurrency, and the token
/// cost of every text passed to `embed_unchecked`.
#[derive(Debug, Default)]
pub struct InstrumentedBackend<B> {
    inner: B,
    count_requests: AtomicUsize,
    embed_requests: AtomicUsize,
    texts_embedded: AtomicUsize,
    max_tokens: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

struct InFlight<'a>(&'a AtomicUsize);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl<B> InstrumentedBackend<B> {
    pub fn new(inner: B) -> Self {
        InstrumentedBackend {
            inner,
            count_requests: AtomicUsize::new(0),
            embed_requests: AtomicUsize::new(0),
            texts_embedded: AtomicUsize::new(0),
            max_tokens: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn usage(&self) -> Usage {
        Usage {
            count_requests: self.count_requests.load(Ordering::SeqCst),
            embed_requests: self.embed_requests.load(Ordering::SeqCst),
            texts_embedded: self.texts_embedded.load(Ordering::SeqCst),
            max_tokens_submitted: self.max_tokens.load(Ordering::SeqCst),
            peak_in_flight: self.peak.load(Ordering::SeqCst),
        }
    }

    fn enter(&self) -> InFlight<'_> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        InFlight(&self.in_flight)
    }
}

impl<B: TokenCounter> TokenCounter for InstrumentedBackend<B> {
    fn count_tokens(&self, text: &str) -> Result<usize, CountError> {
        let _guard = self.enter();
        self.count_requests.fetch_add(1, Ordering::SeqCst);
        self.inner.count_tokens(text)
    }

    fn count_tokens_batch(&self, texts: &[String]) -> Result<Vec<usize>, CountError> {
        let _guard = self.enter();
        self.count_requests.fetch_add(1, Ordering::SeqCst);
        self.inner.count_tokens_batch(texts)
    }
}

impl<B: EmbeddingBackend> EmbeddingBackend for InstrumentedBackend<B> {
    fn info(&self) -> &BackendInfo {
        self.inner.info()
    }

    fn embed_unchecked(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        let _guard = self.enter();
        self.embed_requests.fetch_add(1, Ordering::SeqCst);
        self.texts_embedded.fetch_add(texts.len(), Ordering::SeqCst);
        let worst = self.inner.count_tokens_batch(texts)?.into_iter().max().unwrap_or(0);
        self.max_tokens.fetch_max(worst, Ordering::SeqCst);
        self.inner.embed_unchecked(texts)
    }
}
