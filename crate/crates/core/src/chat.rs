//! Conversation records and the function definitions advertised to the model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChatError {
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("only assistant messages may carry a function call")]
    FunctionCallOnNonAssistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
    System,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::System => "system",
        }
    }
}

impl FromStr for Role {
    type Err = ChatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "user" => Ok(Role::User),
            "assistant" => Ok(Role::Assistant),
            "system" => Ok(Role::System),
            other => Err(ChatError::UnknownRole(other.to_string())),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A model-issued call. `arguments` stays raw JSON text until dispatch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCall {
    pub name: String,
    pub arguments: String,
}

impl FunctionCall {
    pub fn new(name: impl Into<String>, arguments: impl Into<String>) -> Self {
        FunctionCall {
            name: name.into(),
            arguments: arguments.into(),
        }
    }

    /// `Name(args)`, with valid JSON arguments pretty-printed.
    pub fn display(&self) -> String {
        let args = serde_json::from_str::<Value>(&self.arguments)
            .ok()
            .and_then(|v| serde_json::to_string_pretty(&v).ok())
            .unwrap_or_else(|| self.arguments.clone());
        format!("{}({})", self.name, args)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMessage")]
pub struct ChatMessage {
    role: Role,
    content: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    function_call: Option<FunctionCall>,
    timestamp_ms: u64,
}

#[derive(Deserialize)]
struct RawMessage {
    role: String,
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    function_call: Option<FunctionCall>,
    #[serde(default)]
    timestamp_ms: u64,
}

impl TryFrom<RawMessage> for ChatMessage {
    type Error = ChatError;

    fn try_from(raw: RawMessage) -> Result<Self, Self::Error> {
        ChatMessage::try_new(
            raw.role.parse()?,
            raw.content.unwrap_or_default(),
            raw.function_call,
            raw.timestamp_ms,
        )
    }
}

impl ChatMessage {
    pub fn try_new(
        role: Role,
        content: impl Into<String>,
        function_call: Option<FunctionCall>,
        timestamp_ms: u64,
    ) -> Result<Self, ChatError> {
        if function_call.is_some() && role != Role::Assistant {
            return Err(ChatError::FunctionCallOnNonAssistant);
        }
        Ok(ChatMessage {
            role,
            content: content.into(),
            function_call,
            timestamp_ms,
        })
    }

    pub fn user(content: impl Into<String>, ts: u64) -> Self {
        Self::try_new(Role::User, content, None, ts).expect("valid")
    }

    pub fn system(content: impl Into<String>, ts: u64) -> Self {
        Self::try_new(Role::System, content, None, ts).expect("valid")
    }

    pub fn assistant(content: impl Into<String>, function_call: Option<FunctionCall>, ts: u64) -> Self {
        Self::try_new(Role::Assistant, content, function_call, ts).expect("valid")
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn function_call(&self) -> Option<&FunctionCall> {
        self.function_call.as_ref()
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    pub fn restamped(mut self, ts: u64) -> Self {
        self.timestamp_ms = ts;
        self
    }
}

/// Append-only message log. The first entry is the initializing prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    messages: Vec<ChatMessage>,
}

impl HistoryBuffer {
    pub fn new(system_prompt: impl Into<String>) -> Self {
        HistoryBuffer {
            messages: vec![ChatMessage::system(system_prompt, 0)],
        }
    }

    pub fn push(&mut self, msg: ChatMessage) {
        self.messages.push(msg);
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn last(&self) -> &ChatMessage {
        self.messages.last().expect("never empty")
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionName {
    ExecutePlan,
    CancelPlan,
    ContinuePlan,
}

impl FunctionName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FunctionName::ExecutePlan => "ExecutePlan",
            FunctionName::CancelPlan => "CancelPlan",
            FunctionName::ContinuePlan => "ContinuePlan",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "ExecutePlan" => Some(FunctionName::ExecutePlan),
            "CancelPlan" => Some(FunctionName::CancelPlan),
            "ContinuePlan" => Some(FunctionName::ContinuePlan),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: FunctionName,
    pub description: String,
    pub parameters: Value,
}

pub fn function_defs(tour_mode: bool) -> Vec<FunctionDef> {
    let no_params = json!({"type": "object", "properties": {}});
    let mut defs = vec![
        FunctionDef {
            name: FunctionName::ExecutePlan,
            description: "Start executing a sequence of robot actions. Every entry must be one of \
                          the action titles listed in your instructions. Starting a new plan \
                          replaces any plan that is still running."
                .into(),
            parameters: json!({
                "type": "object",
                "properties": {
                    "action_sequence": {
                        "type": "array",
                        "items": {"type": "string"},
                        "description": "Action titles in the order they should run."
                    }
                },
                "required": ["action_sequence"]
            }),
        },
        FunctionDef {
            name: FunctionName::CancelPlan,
            description: "Stop the plan that is currently executing.".into(),
            parameters: no_params.clone(),
        },
    ];
    if tour_mode {
        defs.push(FunctionDef {
            name: FunctionName::ContinuePlan,
            description: "Start the next action of the current plan once the user is ready to move on."
                .into(),
            parameters: no_params,
        });
    }
    defs
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArgumentError {
    #[error("arguments are not valid JSON: {0}")]
    InvalidJson(String),
    #[error("expected an object with an `action_sequence` array of strings")]
    WrongShape,
    #[error("`action_sequence` is empty")]
    Empty,
}

#[derive(Deserialize)]
struct ExecutePlanArgs {
    action_sequence: Vec<String>,
}

pub fn parse_execute_plan(arguments: &str) -> Result<Vec<String>, ArgumentError> {
    let value: Value =
        serde_json::from_str(arguments).map_err(|e| ArgumentError::InvalidJson(e.to_string()))?;
    let args: ExecutePlanArgs = serde_json::from_value(value).map_err(|_| ArgumentError::WrongShape)?;
    if args.action_sequence.is_empty() {
        return Err(ArgumentError::Empty);
    }
    Ok(args.action_sequence)
}
