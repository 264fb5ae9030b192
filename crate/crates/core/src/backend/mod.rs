//! Chat-completion backends: a scripted one for tests and demos, and an HTTP
//! client for OpenAI-compatible servers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::chat::{ChatMessage, FunctionDef};

pub mod http;
pub mod scripted;
pub mod wire;

pub use http::{HttpChatBackend, HttpConfig, HttpEmbedder};
pub use scripted::{Scenario, ScriptedBackend};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: usize },
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("missing configuration: {0}")]
    Config(String),
    #[error("scripted scenario exhausted at query {query}")]
    ScenarioExhausted { query: usize },
    #[error("query {query} does not match scripted step {step} ({expected})")]
    TriggerMismatch {
        query: usize,
        step: usize,
        expected: String,
    },
}

/// Returns the next assistant message for a full history.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, history: &[ChatMessage], functions: &[FunctionDef]) -> Result<ChatMessage, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Arc<B> {
    fn complete(&self, history: &[ChatMessage], functions: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        (**self).complete(history, functions)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, history: &[ChatMessage], functions: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        (**self).complete(history, functions)
    }
}

/// Wraps a backend and records every history it was queried with.
pub struct RecordingBackend<B> {
    inner: B,
    calls: AtomicUsize,
    payloads: Mutex<Vec<Vec<ChatMessage>>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            calls: AtomicUsize::new(0),
            payloads: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn payloads(&self) -> Vec<Vec<ChatMessage>> {
        self.payloads.lock().expect("poisoned").clone()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, history: &[ChatMessage], functions: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.payloads.lock().expect("poisoned").push(history.to_vec());
        self.inner.complete(history, functions)
    }
}
