//! Session events and the speaker-prefixed transcript.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    RobotDialogue {
        text: String,
    },
    SystemNote {
        text: String,
    },
    PlanStarted {
        actions: Vec<String>,
    },
    ActionStarted {
        index: usize,
        title: String,
    },
    ActionCompleted {
        index: usize,
        title: String,
        behavior: String,
    },
    PlanCompleted,
    PlanCancelled {
        completed: usize,
        remaining: Vec<String>,
    },
    PlanRejected {
        reason: String,
    },
    AwaitingWake,
    Resumed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEvent {
    pub timestamp_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl AgentEvent {
    pub fn new(timestamp_ms: u64, kind: EventKind) -> Self {
        AgentEvent { timestamp_ms, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Speaker {
    #[serde(rename = "USER")]
    User,
    #[serde(rename = "DOBBY")]
    Dobby,
    #[serde(rename = "SYSTEM")]
    System,
    #[serde(rename = "FUNCTION CALL")]
    FunctionCall,
}

impl Speaker {
    pub fn label(&self) -> &'static str {
        match self {
            Speaker::User => "USER",
            Speaker::Dobby => "DOBBY",
            Speaker::System => "SYSTEM",
            Speaker::FunctionCall => "FUNCTION CALL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub text: String,
    pub timestamp_ms: u64,
}

impl TranscriptEntry {
    /// `SPEAKER: text`, with a trailing newline.
    pub fn render(&self) -> String {
        format!("{}: {}\n", self.speaker.label(), self.text)
    }
}

/// Entries accumulate here and are drained by whoever persists them.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    flushed: usize,
}

impl Transcript {
    pub fn push(&mut self, speaker: Speaker, text: impl Into<String>, timestamp_ms: u64) {
        self.entries.push(TranscriptEntry {
            speaker,
            text: text.into(),
            timestamp_ms,
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    /// Entries added since the previous call.
    pub fn take_new(&mut self) -> Vec<TranscriptEntry> {
        let new = self.entries[self.flushed..].to_vec();
        self.flushed = self.entries.len();
        new
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(TranscriptEntry::render).collect()
    }
}
