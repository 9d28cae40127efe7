//! Client for the JSON embedding protocol:
//!
//! - `GET /info` returns `{"model", "max_tokens", "dimension"}`
//! - `POST /count_tokens` with `{"texts": [...]}` returns `{"counts": [...]}`
//! - `POST /embed` with `{"texts": [...]}` returns `{"embeddings": [[...], ...]}`
//!
//! Client errors come back as status 400 with `{"error": "..."}`.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ureq::http::Response;
use ureq::{Agent, Body};

use super::{BackendError, BackendInfo, Embedding, EmbeddingBackend};
use crate::prompt::{CountError, TokenCounter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub retries: u32,
    /// Delay before the first retry; doubled for each subsequent one.
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { retries: 3, base_delay: Duration::from_millis(250), timeout: Duration::from_secs(300) }
    }
}

#[derive(Serialize)]
struct TextsRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct CountsResponse {
    counts: Vec<usize>,
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    embeddings: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ErrorResponse {
    error: String,
}

/// Remote backend speaking the embedding protocol over HTTP/1.1.
pub struct HttpBackend {
    agent: Agent,
    endpoint: String,
    info: BackendInfo,
    retry: RetryPolicy,
    batch_size: usize,
}

impl HttpBackend {
    /// Connects and fetches `/info`. The advertised limits are validated
    /// against the known checkpoints.
    pub fn connect(endpoint: &str, retry: RetryPolicy, batch_size: usize) -> Result<Self, BackendError> {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(retry.timeout))
            .build()
            .into();
        let endpoint = endpoint.trim_end_matches('/').to_string();
        let mut backend = HttpBackend {
            agent,
            endpoint,
            info: BackendInfo { model_name: String::new(), max_tokens: 0, dimension: 0 },
            retry,
            batch_size: batch_size.max(1),
        };
        let info: BackendInfo = backend.with_retry(|b| b.agent.get(format!("{}/info", b.endpoint)).call())?;
        info.validate()?;
        backend.info = info;
        Ok(backend)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn post<T: DeserializeOwned>(&self, path: &str, texts: &[String]) -> Result<T, BackendError> {
        let url = format!("{}/{path}", self.endpoint);
        self.with_retry(|b| b.agent.post(&url).send_json(TextsRequest { texts }))
    }

    fn with_retry<T, F>(&self, send: F) -> Result<T, BackendError>
    where
        T: DeserializeOwned,
        F: Fn(&Self) -> Result<Response<Body>, ureq::Error>,
    {
        let mut delay = self.retry.base_delay;
        let mut attempt = 0;
        loop {
            let err = match send(self) {
                Ok(resp) => match decode(resp) {
                    Ok(v) => return Ok(v),
                    Err(e @ (BackendError::Rejected { .. } | BackendError::Protocol(_))) => return Err(e),
                    Err(e) => e,
                },
                Err(e) => BackendError::Unreachable(e.to_string()),
            };
            if attempt >= self.retry.retries {
                return Err(err);
            }
            tracing::warn!(endpoint = %self.endpoint, attempt, error = %err, "retrying backend request");
            thread::sleep(delay);
            delay *= 2;
            attempt += 1;
        }
    }
}

/// Turns a response into a value. 5xx statuses map to `Unreachable` so the
/// caller retries them; 4xx statuses are final.
fn decode<T: DeserializeOwned>(mut resp: Response<Body>) -> Result<T, BackendError> {
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(|e| BackendError::Unreachable(e.to_string()))?;
    if status >= 500 {
        return Err(BackendError::Unreachable(format!("status {status}: {body}")));
    }
    if status >= 400 {
        let message = serde_json::from_str::<ErrorResponse>(&body).map(|e| e.error).unwrap_or(body);
        return Err(BackendError::Rejected { status, message });
    }
    serde_json::from_str(&body).map_err(|e| BackendError::Protocol(format!("{e}: {body}")))
}

impl TokenCounter for HttpBackend {
    fn count_tokens(&self, text: &str) -> Result<usize, CountError> {
        Ok(self.count_tokens_batch(&[text.to_string()])?[0])
    }

    fn count_tokens_batch(&self, texts: &[String]) -> Result<Vec<usize>, CountError> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            let resp: CountsResponse =
                self.post("count_tokens", batch).map_err(|e| CountError(e.to_string()))?;
            if resp.counts.len() != batch.len() {
                return Err(CountError(format!(
                    "sent {} texts, got {} counts",
                    batch.len(),
                    resp.counts.len()
                )));
            }
            out.extend(resp.counts);
        }
        Ok(out)
    }
}

impl EmbeddingBackend for HttpBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn embed_unchecked(&self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.batch_size) {
            let resp: EmbeddingsResponse = self.post("embed", batch)?;
            for v in resp.embeddings {
                out.push(Embedding::new(v).map_err(|e| BackendError::Protocol(e.to_string()))?);
            }
        }
        Ok(out)
    }
}
