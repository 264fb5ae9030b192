//! OpenAI-compatible JSON bodies for chat completions and embeddings.
//!
//! Requests use the `functions` / `function_call` form. Responses may carry
//! either a `function_call` or `tool_calls`; the first call wins.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::BackendError;
use crate::chat::{ChatMessage, FunctionCall, FunctionDef, Role};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFunctionCall {
    pub name: String,
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: String,
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_call: Option<WireFunctionCall>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WireFunction<'a> {
    pub name: &'static str,
    pub description: &'a str,
    pub parameters: &'a Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: Vec<WireMessage>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<WireFunction<'a>>,
}

pub fn to_wire(msg: &ChatMessage) -> WireMessage {
    let call = msg.function_call().map(|c| WireFunctionCall {
        name: c.name.clone(),
        arguments: c.arguments.clone(),
    });
    // content is null for pure function-call turns
    let content = if call.is_some() && msg.content().is_empty() {
        None
    } else {
        Some(msg.content().to_string())
    };
    WireMessage {
        role: msg.role().as_str().to_string(),
        content,
        function_call: call,
    }
}

pub fn from_wire(msg: &WireMessage, ts: u64) -> Result<ChatMessage, BackendError> {
    let role: Role = msg
        .role
        .parse()
        .map_err(|e: crate::chat::ChatError| BackendError::MalformedResponse(e.to_string()))?;
    let call = msg
        .function_call
        .as_ref()
        .map(|c| FunctionCall::new(&c.name, &c.arguments));
    ChatMessage::try_new(role, msg.content.clone().unwrap_or_default(), call, ts)
        .map_err(|e| BackendError::MalformedResponse(e.to_string()))
}

pub fn chat_request<'a>(model: &'a str, history: &[ChatMessage], functions: &'a [FunctionDef]) -> ChatRequest<'a> {
    ChatRequest {
        model,
        messages: history.iter().map(to_wire).collect(),
        functions: functions
            .iter()
            .map(|f| WireFunction {
                name: f.name.as_str(),
                description: &f.description,
                parameters: &f.parameters,
            })
            .collect(),
    }
}

#[derive(Deserialize)]
struct ToolCall {
    function: ToolFunction,
}

#[derive(Deserialize)]
struct ToolFunction {
    name: String,
    arguments: Value,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    function_call: Option<ToolFunction>,
    #[serde(default)]
    tool_calls: Option<Vec<ToolCall>>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

fn arguments_text(v: Value) -> String {
    match v {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

/// Parses the first choice of a chat-completions response body.
pub fn parse_chat_response(body: &str) -> Result<ChatMessage, BackendError> {
    let resp: ChatResponse =
        serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    let msg = resp
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| BackendError::MalformedResponse("no choices".into()))?
        .message;
    if let Some(role) = msg.role.as_deref() {
        if role != "assistant" {
            return Err(BackendError::MalformedResponse(format!("unexpected role `{role}`")));
        }
    }
    let call = msg
        .function_call
        .or_else(|| msg.tool_calls.and_then(|t| t.into_iter().next()).map(|t| t.function))
        .map(|f| FunctionCall::new(f.name, arguments_text(f.arguments)));
    let content = msg.content.unwrap_or_default();
    if content.is_empty() && call.is_none() {
        return Err(BackendError::MalformedResponse("response has neither content nor a function call".into()));
    }
    Ok(ChatMessage::assistant(content, call, 0))
}

#[derive(Debug, Serialize)]
pub struct EmbeddingRequest<'a> {
    pub model: &'a str,
    pub input: &'a str,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

pub fn parse_embedding_response(body: &str) -> Result<Vec<f64>, BackendError> {
    let resp: EmbeddingResponse =
        serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    resp.data
        .into_iter()
        .next()
        .map(|d| d.embedding)
        .ok_or_else(|| BackendError::MalformedResponse("no embedding data".into()))
}
