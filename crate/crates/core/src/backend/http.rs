//! Blocking HTTP clients for OpenAI-compatible chat and embedding endpoints.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Serialize;

use super::wire::{chat_request, parse_chat_response, parse_embedding_response, EmbeddingRequest};
use super::{BackendError, ChatBackend};
use crate::chat::{ChatMessage, FunctionDef};
use crate::grounding::{Embedding, EmbeddingError, EmbeddingProvider};

pub const API_KEY_ENV: &str = "DOBBY_API_KEY";
pub const API_BASE_ENV: &str = "DOBBY_API_BASE";
pub const MODEL_ENV: &str = "DOBBY_MODEL";
pub const EMBEDDING_MODEL_ENV: &str = "DOBBY_EMBEDDING_MODEL";

pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4-0613";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-ada-002";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    pub embedding_model: String,
    pub timeout: Duration,
    /// Delay before each retry; its length is the retry budget.
    pub backoff: Vec<Duration>,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpConfig {
            base_url: base_url.into(),
            api_key: api_key.into(),
            model: DEFAULT_MODEL.into(),
            embedding_model: DEFAULT_EMBEDDING_MODEL.into(),
            timeout: Duration::from_secs(30),
            backoff: vec![Duration::from_secs(1), Duration::from_secs(2)],
        }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::Config(format!("{API_KEY_ENV} is not set")))?;
        let base = std::env::var(API_BASE_ENV).unwrap_or_else(|_| DEFAULT_API_BASE.into());
        let mut cfg = HttpConfig::new(base, key);
        if let Ok(m) = std::env::var(MODEL_ENV) {
            cfg.model = m;
        }
        if let Ok(m) = std::env::var(EMBEDDING_MODEL_ENV) {
            cfg.embedding_model = m;
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
struct HttpTransport {
    client: Client,
    config: HttpConfig,
}

enum Failure {
    Retryable(BackendError),
    Fatal(BackendError),
}

impl HttpTransport {
    fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpTransport { client, config })
    }

    fn attempt<T: Serialize>(&self, url: &str, body: &T) -> Result<String, Failure> {
        let resp = match self
            .client
            .post(url)
            .bearer_auth(&self.config.api_key)
            .json(body)
            .send()
        {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Err(Failure::Retryable(BackendError::Timeout { attempts: 0 })),
            Err(e) => return Err(Failure::Retryable(BackendError::Unavailable(e.to_string()))),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Err(Failure::Retryable(BackendError::Timeout { attempts: 0 })),
            Err(e) => return Err(Failure::Retryable(BackendError::Unavailable(e.to_string()))),
        };
        if status.is_success() {
            return Ok(text);
        }
        let err = BackendError::Http {
            status: status.as_u16(),
            body: text,
        };
        match status {
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Err(Failure::Fatal(BackendError::Auth(status.as_u16()))),
            s if s.is_server_error() => Err(Failure::Retryable(err)),
            _ => Err(Failure::Fatal(err)),
        }
    }

    fn post<T: Serialize>(&self, path: &str, body: &T) -> Result<String, BackendError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), path);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&url, body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(e)) => {
                    let Some(delay) = self.config.backoff.get(attempts - 1) else {
                        return Err(match e {
                            BackendError::Timeout { .. } => BackendError::Timeout { attempts },
                            other => other,
                        });
                    };
                    log::warn!("{url}: attempt {attempts} failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(*delay);
                }
            }
        }
    }
}

/// Chat completions over HTTP. Must not be called from inside an async runtime.
#[derive(Debug)]
pub struct HttpChatBackend {
    transport: HttpTransport,
}

impl HttpChatBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        Ok(HttpChatBackend {
            transport: HttpTransport::new(config)?,
        })
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, history: &[ChatMessage], functions: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        let body = chat_request(&self.transport.config.model, history, functions);
        let text = self.transport.post("chat/completions", &body)?;
        parse_chat_response(&text)
    }
}

/// Embeddings over HTTP, cached by exact input text.
#[derive(Debug)]
pub struct HttpEmbedder {
    transport: HttpTransport,
    cache: Mutex<HashMap<String, Embedding>>,
    dimension: Mutex<Option<usize>>,
    default_dimension: usize,
}

impl HttpEmbedder {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        Ok(HttpEmbedder {
            transport: HttpTransport::new(config)?,
            cache: Mutex::new(HashMap::new()),
            dimension: Mutex::new(None),
            default_dimension: 1536,
        })
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("poisoned").len()
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::InvalidInput("empty text".into()));
        }
        if let Some(v) = self.cache.lock().expect("poisoned").get(text) {
            return Ok(v.clone());
        }
        let body = EmbeddingRequest {
            model: &self.transport.config.embedding_model,
            input: text,
        };
        let raw = self
            .transport
            .post("embeddings", &body)
            .and_then(|t| parse_embedding_response(&t))
            .map_err(|e| EmbeddingError::Backend(e.to_string()))?;
        let v = Embedding::new(raw)?;
        {
            let mut dim = self.dimension.lock().expect("poisoned");
            match *dim {
                Some(expected) if expected != v.dimension() => {
                    return Err(EmbeddingError::Inconsistent {
                        expected,
                        got: v.dimension(),
                    })
                }
                _ => *dim = Some(v.dimension()),
            }
        }
        // Concurrent misses may both fetch; the first stored value wins.
        let mut cache = self.cache.lock().expect("poisoned");
        Ok(cache.entry(text.to_string()).or_insert(v).clone())
    }

    fn dimension(&self) -> usize {
        self.dimension.lock().expect("poisoned").unwrap_or(self.default_dimension)
    }
}
