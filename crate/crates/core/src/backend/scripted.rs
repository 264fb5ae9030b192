//! Deterministic backend that replays a scenario file.
//!
//! ```json
//! {
//!   "strict": true,
//!   "steps": [
//!     { "trigger": { "user_contains": "apple" },
//!       "response": { "content": "On it.",
//!                     "function_call": { "name": "ExecutePlan",
//!                                        "arguments": { "action_sequence": ["Drive to Apple"] } } } }
//!   ],
//!   "inputs": ["I'd like an apple.", "/wait 10"]
//! }
//! ```
//!
//! Triggers are `turn_index` (zero-based query count), `user_contains` or
//! `system_contains` (case-insensitive, tested against the newest history
//! entry). Steps are consumed in order. `arguments` may be a JSON string or an
//! inline object. `inputs` are optional session lines used by replay.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BackendError, ChatBackend};
use crate::chat::{ChatMessage, FunctionCall, FunctionDef, Role};

pub const LENIENT_FALLBACK: &str = "Hmm, I'm not sure what to say to that.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    TurnIndex(usize),
    UserContains(String),
    SystemContains(String),
}

impl Trigger {
    fn fires(&self, query: usize, latest: Option<&ChatMessage>) -> bool {
        let contains = |role: Role, needle: &str| {
            latest.is_some_and(|m| m.role() == role && m.content().to_lowercase().contains(&needle.to_lowercase()))
        };
        match self {
            Trigger::TurnIndex(n) => *n == query,
            Trigger::UserContains(s) => contains(Role::User, s),
            Trigger::SystemContains(s) => contains(Role::System, s),
        }
    }

    fn describe(&self) -> String {
        match self {
            Trigger::TurnIndex(n) => format!("turn_index {n}"),
            Trigger::UserContains(s) => format!("user_contains {s:?}"),
            Trigger::SystemContains(s) => format!("system_contains {s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arguments {
    Text(String),
    Inline(Value),
}

impl Arguments {
    pub fn to_text(&self) -> String {
        match self {
            Arguments::Text(s) => s.clone(),
            Arguments::Inline(v) => v.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCall {
    pub name: String,
    #[serde(default = "empty_args")]
    pub arguments: Arguments,
}

fn empty_args() -> Arguments {
    Arguments::Inline(Value::Object(Default::default()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_call: Option<ScriptedCall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub trigger: Trigger,
    pub response: ScriptedResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default = "default_strict")]
    pub strict: bool,
    pub steps: Vec<Step>,
    #[serde(default)]
    pub inputs: Vec<String>,
}

fn default_strict() -> bool {
    true
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("step {0} has neither content nor a function call")]
    EmptyResponse(usize),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        for (i, step) in s.steps.iter().enumerate() {
            if step.response.content.is_none() && step.response.function_call.is_none() {
                return Err(ScenarioError::EmptyResponse(i));
            }
        }
        Ok(s)
    }

    pub fn step(trigger: Trigger, content: Option<&str>, call: Option<(&str, &str)>) -> Step {
        Step {
            trigger,
            response: ScriptedResponse {
                content: content.map(str::to_string),
                function_call: call.map(|(n, a)| ScriptedCall {
                    name: n.to_string(),
                    arguments: Arguments::Text(a.to_string()),
                }),
            },
        }
    }
}

#[derive(Debug, Default)]
struct Cursor {
    next_step: usize,
    queries: usize,
}

#[derive(Debug)]
pub struct ScriptedBackend {
    scenario: Scenario,
    cursor: Mutex<Cursor>,
}

impl ScriptedBackend {
    pub fn new(scenario: Scenario) -> Self {
        ScriptedBackend {
            scenario,
            cursor: Mutex::new(Cursor::default()),
        }
    }

    pub fn from_steps(steps: Vec<Step>) -> Self {
        Self::new(Scenario {
            description: None,
            strict: true,
            steps,
            inputs: Vec::new(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn remaining_steps(&self) -> usize {
        self.scenario.steps.len() - self.cursor.lock().expect("poisoned").next_step
    }

    fn respond(step: &Step, ts: u64) -> ChatMessage {
        let call = step
            .response
            .function_call
            .as_ref()
            .map(|c| FunctionCall::new(&c.name, c.arguments.to_text()));
        ChatMessage::assistant(step.response.content.clone().unwrap_or_default(), call, ts)
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, history: &[ChatMessage], _functions: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        let mut cur = self.cursor.lock().expect("poisoned");
        let query = cur.queries;
        cur.queries += 1;
        let latest = history.last();
        let ts = latest.map_or(0, ChatMessage::timestamp_ms);
        let steps = &self.scenario.steps;

        if self.scenario.strict {
            let Some(step) = steps.get(cur.next_step) else {
                return Err(BackendError::ScenarioExhausted { query });
            };
            if !step.trigger.fires(query, latest) {
                return Err(BackendError::TriggerMismatch {
                    query,
                    step: cur.next_step,
                    expected: step.trigger.describe(),
                });
            }
            cur.next_step += 1;
            return Ok(Self::respond(step, ts));
        }

        match (cur.next_step..steps.len()).find(|&i| steps[i].trigger.fires(query, latest)) {
            Some(i) => {
                cur.next_step = i + 1;
                Ok(Self::respond(&steps[i], ts))
            }
            None => Ok(ChatMessage::assistant(LENIENT_FALLBACK, None, ts)),
        }
    }
}
