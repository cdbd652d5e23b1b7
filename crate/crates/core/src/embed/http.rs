use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

/// Retry schedule for transport failures and 5xx responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

/// Client for `POST {endpoint}/v1/embed`.
#[derive(Debug)]
pub struct HttpEmbedder {
    endpoint: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
    /// Configured or first-advertised dimension; every response must agree.
    dim: Mutex<Option<usize>>,
}

impl HttpEmbedder {
    pub fn new(endpoint: &str, expected_dim: Option<usize>, retry: RetryPolicy) -> Result<Self, EmbedError> {
        if retry.attempts == 0 {
            return Err(EmbedError::Config("retry attempts must be at least 1".into()));
        }
        let endpoint = endpoint.trim_end_matches('/').to_string();
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(EmbedError::Config(format!("endpoint {endpoint:?} is not an http(s) URL")));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(300))
            .build();
        Ok(Self {
            endpoint,
            agent,
            retry,
            dim: Mutex::new(expected_dim),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn url(&self) -> String {
        format!("{}/v1/embed", self.endpoint)
    }

    fn call_once(&self, texts: &[String]) -> Result<EmbedResponse, Attempt> {
        let result = self
            .agent
            .post(&self.url())
            .set("Content-Type", "application/json; charset=utf-8")
            .send_json(EmbedRequest { texts });
        match result {
            Ok(resp) => resp.into_json::<EmbedResponse>().map_err(|e| {
                Attempt::Fatal(EmbedError::Protocol {
                    endpoint: self.endpoint.clone(),
                    message: e.to_string(),
                })
            }),
            Err(ureq::Error::Status(status, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                let message = serde_json::from_str::<ErrorBody>(&body)
                    .map(|b| b.error)
                    .unwrap_or(body);
                let err = EmbedError::Status {
                    endpoint: self.endpoint.clone(),
                    status,
                    message,
                };
                if status >= 500 {
                    Err(Attempt::Retryable(err))
                } else {
                    Err(Attempt::Fatal(err))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Attempt::Retryable(EmbedError::Transport {
                endpoint: self.endpoint.clone(),
                attempts: 0,
                message: t.to_string(),
            })),
        }
    }

    fn validate(&self, texts: &[String], resp: EmbedResponse) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if resp.vectors.len() != texts.len() {
            return Err(EmbedError::CountMismatch {
                endpoint: self.endpoint.clone(),
                expected: texts.len(),
                got: resp.vectors.len(),
            });
        }
        let mut known = self.dim.lock().expect("dim lock poisoned");
        let expected = *known.get_or_insert(resp.dim);
        if resp.dim != expected {
            return Err(EmbedError::DimMismatch {
                endpoint: self.endpoint.clone(),
                expected,
                got: resp.dim,
            });
        }
        resp.vectors
            .into_iter()
            .map(|values| {
                if values.len() != expected {
                    return Err(EmbedError::DimMismatch {
                        endpoint: self.endpoint.clone(),
                        expected,
                        got: values.len(),
                    });
                }
                EmbeddingVector::new(values)
            })
            .collect()
    }
}

enum Attempt {
    Retryable(EmbedError),
    Fatal(EmbedError),
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn dim(&self) -> Option<usize> {
        *self.dim.lock().expect("dim lock poisoned")
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut backoff = self.retry.initial_backoff;
        let mut attempt = 1;
        loop {
            match self.call_once(texts) {
                Ok(resp) => return self.validate(texts, resp),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(e)) => {
                    if attempt >= self.retry.attempts {
                        return Err(match e {
                            EmbedError::Transport { endpoint, message, .. } => EmbedError::Transport {
                                endpoint,
                                attempts: attempt,
                                message,
                            },
                            other => other,
                        });
                    }
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

/// One-shot form of [`HttpEmbedder::embed_batch`] with the default retry
/// policy.
pub fn http_embed_batch(endpoint: &str, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
    HttpEmbedder::new(endpoint, None, RetryPolicy::default())?.embed_batch(texts)
}
