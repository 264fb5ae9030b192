//! One interaction session in either mode, plus its metrics.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agent::{ConversationState, Engine};
use crate::baseline::BaselineGuide;
use crate::events::{AgentEvent, EventKind, TranscriptEntry};
use crate::executor::RobotSnapshot;
use crate::sim::Behavior;
use crate::world::BehaviorId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Input {
    Utterance { text: String },
    /// Let simulated time pass.
    Advance { ms: u64 },
    /// Treat the user as silent from now on.
    Idle,
    Cancel,
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Conversational,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub interaction_time_s: f64,
    pub destinations_visited: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub mode: Mode,
    pub clock_ms: u64,
    /// Absent in baseline mode, which has no wake word.
    pub conversation: Option<ConversationState>,
    pub tour_mode: bool,
    pub robot: RobotSnapshot,
}

/// What one input produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub events: Vec<AgentEvent>,
    pub transcript: Vec<TranscriptEntry>,
}

enum Inner {
    Conversational(Box<Engine>),
    Baseline(Box<BaselineGuide>),
}

pub struct Session {
    inner: Inner,
    first_utterance_ms: Option<u64>,
    visited: BTreeSet<String>,
}

impl Session {
    pub fn conversational(engine: Engine) -> Self {
        Self::wrap(Inner::Conversational(Box::new(engine)))
    }

    pub fn baseline(guide: BaselineGuide) -> Self {
        Self::wrap(Inner::Baseline(Box::new(guide)))
    }

    fn wrap(inner: Inner) -> Self {
        Session {
            inner,
            first_utterance_ms: None,
            visited: BTreeSet::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        match self.inner {
            Inner::Conversational(_) => Mode::Conversational,
            Inner::Baseline(_) => Mode::Baseline,
        }
    }

    pub fn engine(&self) -> Option<&Engine> {
        match &self.inner {
            Inner::Conversational(e) => Some(e),
            Inner::Baseline(_) => None,
        }
    }

    pub fn guide(&self) -> Option<&BaselineGuide> {
        match &self.inner {
            Inner::Baseline(g) => Some(g),
            Inner::Conversational(_) => None,
        }
    }

    pub fn now(&self) -> u64 {
        match &self.inner {
            Inner::Conversational(e) => e.now(),
            Inner::Baseline(g) => g.now(),
        }
    }

    pub fn handle(&mut self, input: &Input) -> Step {
        if matches!(input, Input::Utterance { .. }) && self.first_utterance_ms.is_none() {
            self.first_utterance_ms = Some(self.now());
        }
        let events = match (&mut self.inner, input) {
            (Inner::Conversational(e), Input::Utterance { text }) => e.handle_user_utterance(text),
            (Inner::Conversational(e), Input::Advance { ms }) => e.advance(*ms),
            (Inner::Conversational(e), Input::Idle) => e.on_silence_timeout(),
            (Inner::Conversational(e), Input::Cancel) => e.console_cancel(),
            (Inner::Conversational(e), Input::Continue) => e.console_continue(),
            (Inner::Baseline(g), Input::Utterance { text }) => g.handle_user_utterance(text),
            (Inner::Baseline(g), Input::Advance { ms }) => g.advance(*ms),
            (Inner::Baseline(_), Input::Idle) => Vec::new(),
            (Inner::Baseline(g), Input::Cancel) => g.cancel(),
            (Inner::Baseline(g), Input::Continue) => g.continue_plan(),
        };
        for e in &events {
            if let EventKind::ActionCompleted { behavior, .. } = &e.kind {
                if let Some(Behavior::DriveTo(id)) = Behavior::parse(&BehaviorId::new(behavior.as_str())) {
                    self.visited.insert(id);
                }
            }
        }
        let transcript = match &mut self.inner {
            Inner::Conversational(e) => e.transcript_mut().take_new(),
            Inner::Baseline(g) => g.transcript_mut().take_new(),
        };
        Step { events, transcript }
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        match &self.inner {
            Inner::Conversational(e) => e.transcript().entries(),
            Inner::Baseline(g) => g.transcript().entries(),
        }
    }

    pub fn render_transcript(&self) -> String {
        self.transcript().iter().map(TranscriptEntry::render).collect()
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        match &self.inner {
            Inner::Conversational(e) => {
                let s = e.snapshot();
                SessionSnapshot {
                    mode: Mode::Conversational,
                    clock_ms: e.now(),
                    conversation: Some(s.conversation),
                    tour_mode: s.tour_mode,
                    robot: s.robot,
                }
            }
            Inner::Baseline(g) => SessionSnapshot {
                mode: Mode::Baseline,
                clock_ms: g.now(),
                conversation: None,
                tour_mode: false,
                robot: g.snapshot().robot,
            },
        }
    }

    /// Interaction time runs from the first utterance to now.
    pub fn metrics(&self) -> SessionMetrics {
        let elapsed = self
            .first_utterance_ms
            .map(|t| self.now().saturating_sub(t))
            .unwrap_or(0);
        SessionMetrics {
            interaction_time_s: elapsed as f64 / 1000.0,
            destinations_visited: self.visited.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::TrigramEmbedder;
    use crate::sim::Lab;
    use std::sync::Arc;

    fn baseline() -> Session {
        let lab = Lab::parse(
            "desk|Front Desk|0|0|Start.\ncage|Drone Cage|3|4|Drones.\nshop|Machine Shop|-3|4|Tools.\n",
            "",
            "",
            None,
        )
        .unwrap();
        Session::baseline(BaselineGuide::new(&lab, Arc::new(TrigramEmbedder), 0.8).unwrap())
    }

    fn say(text: &str) -> Input {
        Input::Utterance { text: text.into() }
    }

    #[test]
    fn visited_counts_distinct_destinations() {
        let mut s = baseline();
        s.handle(&Input::Advance { ms: 2_000 });
        for _ in 0..2 {
            s.handle(&say("Show me the drone cage"));
            s.handle(&Input::Advance { ms: 6_000 });
        }
        s.handle(&say("Show me the machine shop"));
        s.handle(&Input::Advance { ms: 10_000 });
        let m = s.metrics();
        assert_eq!(m.destinations_visited, 2);
        assert_eq!(m.interaction_time_s, 22.0);
    }

    #[test]
    fn step_carries_new_transcript_lines_only() {
        let mut s = baseline();
        let step = s.handle(&say("hello"));
        assert_eq!(step.transcript.len(), 2);
        let step = s.handle(&Input::Advance { ms: 100 });
        assert!(step.transcript.is_empty());
        assert_eq!(s.transcript().len(), 2);
    }

    #[test]
    fn input_json_shape() {
        let i: Input = serde_json::from_str(r#"{"type":"advance","ms":500}"#).unwrap();
        assert_eq!(i, Input::Advance { ms: 500 });
    }
}
