//! JSON frames exchanged with console clients. See `docs/frames.md`.

use dobby_core::session::SessionSnapshot;
use dobby_core::{AgentEvent, Input, SessionMetrics, TranscriptEntry};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const FRAME_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutFrame {
    /// First frame on every connection. `seq` is the last frame it covers.
    Snapshot {
        v: u32,
        seq: u64,
        session: SessionSnapshot,
        transcript: Vec<TranscriptEntry>,
        metrics: SessionMetrics,
        inputs_processed: u64,
    },
    Event {
        v: u32,
        seq: u64,
        event: AgentEvent,
    },
    Transcript {
        v: u32,
        seq: u64,
        entry: TranscriptEntry,
    },
    /// Sent after every processed input.
    StateUpdate {
        v: u32,
        seq: u64,
        inputs_processed: u64,
        session: SessionSnapshot,
        metrics: SessionMetrics,
    },
    /// Sent only to the client whose frame was rejected.
    Error { v: u32, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InFrame {
    UserUtterance { text: String },
    Cancel,
    Continue,
    Idle,
    Advance { ms: u64 },
}

impl From<InFrame> for Input {
    fn from(f: InFrame) -> Input {
        match f {
            InFrame::UserUtterance { text } => Input::Utterance { text },
            InFrame::Cancel => Input::Cancel,
            InFrame::Continue => Input::Continue,
            InFrame::Idle => Input::Idle,
            InFrame::Advance { ms } => Input::Advance { ms },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame is not valid JSON: {0}")]
    Json(String),
    #[error("unsupported frame version {0}")]
    Version(Value),
    #[error("invalid frame: {0}")]
    Shape(String),
    #[error("utterance text is empty")]
    EmptyUtterance,
}

/// `v` may be omitted; if present it must match [`FRAME_VERSION`].
pub fn parse_in_frame(text: &str) -> Result<InFrame, FrameError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| FrameError::Json(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(v) = obj.remove("v") {
            if v != FRAME_VERSION {
                return Err(FrameError::Version(v));
            }
        }
    }
    let frame: InFrame = serde_json::from_value(value).map_err(|e| FrameError::Shape(e.to_string()))?;
    if let InFrame::UserUtterance { text } = &frame {
        if text.trim().is_empty() {
            return Err(FrameError::EmptyUtterance);
        }
    }
    Ok(frame)
}

pub fn error_frame(e: &FrameError) -> OutFrame {
    OutFrame::Error {
        v: FRAME_VERSION,
        message: e.to_string(),
    }
}
