//! Non-conversational guide with a two-template command grammar.
//!
//! Commands are mapped to landmarks and topics by embedding similarity and the
//! configured descriptions are read out unchanged. No chat backend is involved.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::events::{AgentEvent, EventKind, Speaker, Transcript};
use crate::executor::{ExecEvent, Robot, RobotSnapshot, TICK_MS};
use crate::grounding::{EmbeddingProvider, GroundingError, LabelIndex};
use crate::sim::{Behavior, Destination, Lab, LabError, Topic};
use crate::world::{ActionRegistry, ActionSpec};

pub const HELP: &str = "I understand two commands: \"Show me the <landmark>.\" and \"Tell me about <topic>.\"";
pub const UNKNOWN_LANDMARK: &str = "I don't know that landmark.";
pub const UNKNOWN_TOPIC: &str = "I don't know that topic.";

const SHOW_PREFIX: &str = "show me the ";
const TELL_PREFIX: &str = "tell me about ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum BaselineCommand {
    ShowLandmark(String),
    TellTopic(String),
    Unrecognized,
}

/// Case-insensitive prefix match; trailing punctuation is dropped from the target.
pub fn parse_command(utterance: &str) -> BaselineCommand {
    let trimmed = utterance.trim();
    let lower = trimmed.to_lowercase();
    let target = |prefix: &str| {
        // lowercasing can change byte lengths, so cut by characters
        let rest: String = trimmed.chars().skip(prefix.chars().count()).collect();
        rest.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
            .trim()
            .to_string()
    };
    if lower.starts_with(SHOW_PREFIX) {
        let t = target(SHOW_PREFIX);
        if !t.is_empty() {
            return BaselineCommand::ShowLandmark(t);
        }
    } else if lower.starts_with(TELL_PREFIX) {
        let t = target(TELL_PREFIX);
        if !t.is_empty() {
            return BaselineCommand::TellTopic(t);
        }
    }
    BaselineCommand::Unrecognized
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSnapshot {
    pub robot: RobotSnapshot,
}

pub struct BaselineGuide {
    threshold: f64,
    robot: Robot,
    destinations: Vec<Destination>,
    topics: Vec<Topic>,
    drives: Vec<ActionSpec>,
    drive_index: LabelIndex,
    topic_index: Option<LabelIndex>,
    transcript: Transcript,
    /// Destination whose description is read out when the current drive ends.
    pending: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

impl BaselineGuide {
    pub fn new(lab: &Lab, embeddings: Arc<dyn EmbeddingProvider>, threshold: f64) -> Result<Self, BaselineError> {
        let registry: ActionRegistry = lab.registry()?;
        let drives: Vec<ActionSpec> = lab
            .destinations
            .iter()
            .filter_map(|d| {
                let id = Behavior::DriveTo(d.id.clone()).id();
                registry.iter().find(|a| *a.behavior() == id).cloned()
            })
            .collect();
        let drive_index = LabelIndex::build(embeddings.clone(), drives.iter().map(|a| a.title().to_string()))?;
        let topic_index = if lab.topics.is_empty() {
            None
        } else {
            Some(LabelIndex::build(embeddings, lab.topics.iter().map(|t| t.name.clone()))?)
        };
        Ok(BaselineGuide {
            threshold,
            robot: Robot::new(lab.sim(), false),
            destinations: lab.destinations.clone(),
            topics: lab.topics.clone(),
            drives,
            drive_index,
            topic_index,
            transcript: Transcript::default(),
            pending: None,
        })
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn transcript_mut(&mut self) -> &mut Transcript {
        &mut self.transcript
    }

    pub fn now(&self) -> u64 {
        self.robot.clock_ms()
    }

    pub fn snapshot(&self) -> BaselineSnapshot {
        BaselineSnapshot {
            robot: self.robot.snapshot(),
        }
    }

    pub fn handle_user_utterance(&mut self, text: &str) -> Vec<AgentEvent> {
        let now = self.now();
        self.transcript.push(Speaker::User, text, now);
        self.execute(parse_command(text))
    }

    pub fn execute(&mut self, cmd: BaselineCommand) -> Vec<AgentEvent> {
        let mut events = Vec::new();
        match cmd {
            BaselineCommand::Unrecognized => self.say(&mut events, HELP),
            BaselineCommand::TellTopic(target) => {
                let body = match &self.topic_index {
                    Some(index) => match index.best(&target) {
                        Ok(m) if m.similarity >= self.threshold => Some(self.topics[m.index].body.clone()),
                        Ok(_) => None,
                        Err(e) => {
                            self.note(&mut events, format!("grounding failed: {e}"));
                            None
                        }
                    },
                    None => None,
                };
                let text = body.unwrap_or_else(|| UNKNOWN_TOPIC.to_string());
                self.say(&mut events, &text);
            }
            BaselineCommand::ShowLandmark(target) => {
                let m = match self.drive_index.best(&format!("Drive to {target}")) {
                    Ok(m) => m,
                    Err(e) => {
                        self.note(&mut events, format!("grounding failed: {e}"));
                        self.say(&mut events, UNKNOWN_LANDMARK);
                        return events;
                    }
                };
                if m.similarity < self.threshold {
                    self.say(&mut events, UNKNOWN_LANDMARK);
                    return events;
                }
                let action = self.drives[m.index].clone();
                match self.robot.start(vec![action]) {
                    Ok(exec) => {
                        // an override cancels the previous drive first
                        self.record(&mut events, exec);
                        self.pending = Some(m.index);
                    }
                    Err(e) => {
                        self.note(&mut events, format!("cannot start drive: {e}"));
                        self.say(&mut events, UNKNOWN_LANDMARK);
                    }
                }
            }
        }
        events
    }

    pub fn advance(&mut self, ms: u64) -> Vec<AgentEvent> {
        let mut events = Vec::new();
        let mut left = ms;
        while left > 0 {
            let dt = left.min(TICK_MS);
            left -= dt;
            let exec = self.robot.tick(dt);
            if !exec.is_empty() {
                self.record(&mut events, exec);
            }
        }
        events
    }

    pub fn cancel(&mut self) -> Vec<AgentEvent> {
        let mut events = Vec::new();
        let exec = self.robot.cancel();
        if exec.is_empty() {
            self.note(&mut events, "cancel ignored: no active plan");
        } else {
            self.record(&mut events, exec);
        }
        events
    }

    /// There is never a gate in this mode.
    pub fn continue_plan(&mut self) -> Vec<AgentEvent> {
        let mut events = Vec::new();
        self.note(&mut events, "continue ignored: no plan is waiting");
        events
    }

    fn record(&mut self, events: &mut Vec<AgentEvent>, exec: Vec<ExecEvent>) {
        for e in exec {
            let now = self.now();
            self.transcript.push(Speaker::System, e.system_message(), now);
            events.push(AgentEvent::new(now, e.event_kind()));
            match e {
                ExecEvent::PlanCompleted => {
                    if let Some(i) = self.pending.take() {
                        let description = self.destinations[i].description.clone();
                        self.say(events, &description);
                    }
                }
                ExecEvent::PlanCancelled { .. } => self.pending = None,
                _ => {}
            }
        }
    }

    fn say(&mut self, events: &mut Vec<AgentEvent>, text: &str) {
        let now = self.now();
        self.transcript.push(Speaker::Dobby, text, now);
        events.push(AgentEvent::new(now, EventKind::RobotDialogue { text: text.to_string() }));
    }

    fn note(&self, events: &mut Vec<AgentEvent>, text: impl Into<String>) {
        events.push(AgentEvent::new(self.now(), EventKind::SystemNote { text: text.into() }));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::TrigramEmbedder;

    fn lab() -> Lab {
        Lab::parse(
            "desk|Front Desk|0|0|Where every tour begins.\ncage|Drone Cage|4|3|A netted flight arena for quadrotors.\n",
            "",
            "Social Navigation|Robots that move politely among people.\n",
            None,
        )
        .unwrap()
    }

    fn guide() -> BaselineGuide {
        BaselineGuide::new(&lab(), Arc::new(TrigramEmbedder), 0.8).unwrap()
    }

    #[test]
    fn parses_both_templates() {
        assert_eq!(parse_command("Show me the drone cage."), BaselineCommand::ShowLandmark("drone cage".into()));
        assert_eq!(
            parse_command("Tell me about social navigation"),
            BaselineCommand::TellTopic("social navigation".into())
        );
        assert_eq!(parse_command("What's your favorite robot?"), BaselineCommand::Unrecognized);
        assert_eq!(parse_command("SHOW ME THE Drone Cage!!"), BaselineCommand::ShowLandmark("Drone Cage".into()));
        assert_eq!(parse_command("show me the ."), BaselineCommand::Unrecognized);
    }

    #[test]
    fn landmark_drive_then_verbatim_description() {
        let mut g = guide();
        let ev = g.handle_user_utterance("Show me the drone cage.");
        assert!(matches!(ev[0].kind, EventKind::PlanStarted { .. }));
        let ev = g.advance(6_000);
        let said: Vec<_> = ev
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::RobotDialogue { text } => Some(text.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(said, ["A netted flight arena for quadrotors."]);
        assert!(g.robot().world().holds_atom("robot_at:cage"));
    }

    #[test]
    fn topic_verbatim_and_unknowns() {
        let mut g = guide();
        let ev = g.handle_user_utterance("Tell me about social navigation");
        assert!(matches!(&ev[0].kind, EventKind::RobotDialogue { text } if text == "Robots that move politely among people."));
        let ev = g.handle_user_utterance("Tell me about quantum gravity");
        assert!(matches!(&ev[0].kind, EventKind::RobotDialogue { text } if text == UNKNOWN_TOPIC));
        let ev = g.handle_user_utterance("Show me the swimming pool");
        assert!(matches!(&ev[0].kind, EventKind::RobotDialogue { text } if text == UNKNOWN_LANDMARK));
        let ev = g.handle_user_utterance("hello");
        assert!(matches!(&ev[0].kind, EventKind::RobotDialogue { text } if text == HELP));
        assert_eq!(g.robot().executor().phase(), crate::executor::Phase::Idle);
    }

    #[test]
    fn cancel_drops_pending_description() {
        let mut g = guide();
        g.handle_user_utterance("Show me the drone cage");
        g.advance(1_000);
        let ev = g.cancel();
        assert!(matches!(ev[0].kind, EventKind::PlanCancelled { .. }));
        assert!(g.advance(10_000).is_empty());
    }
}
