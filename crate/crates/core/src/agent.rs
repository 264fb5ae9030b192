//! The conversational engine.
//!
//! Every input (utterance, simulation time, console command) is handled to
//! completion before the next one, so the history buffer and the emitted
//! events always form a single linear order. System messages are appended to
//! the history whenever the robot's situation changes, and the model is asked
//! for a short dialogue cue after each action boundary so that what the robot
//! says tracks what it does.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatBackend};
use crate::chat::{function_defs, parse_execute_plan, ChatMessage, FunctionCall, FunctionDef, FunctionName, HistoryBuffer};
use crate::correction::{reorder_plan, CorrectionResult};
use crate::events::{AgentEvent, EventKind, Speaker, Transcript};
use crate::executor::{ExecError, ExecEvent, Robot, RobotSnapshot, TICK_MS};
use crate::grounding::{EmbeddingProvider, Grounder, GroundingError, GroundingOutcome, DEFAULT_THRESHOLD};
use crate::prompt::{compose_prompt, topic_pairs, DEFAULT_PERSONA};
use crate::sim::{Lab, LabError};
use crate::world::ActionSpec;

pub const NOT_CAPABLE_MESSAGE: &str = "You are not capable of the requested task. Explain this to the user.";
pub const APOLOGY: &str = "Sorry, my brain seems to be offline for a moment. Could you say that again?";
pub const AUTH_APOLOGY: &str = "Sorry, I can't reach my language service right now. Please ask my operator to check my credentials.";

/// Upper bound on backend queries triggered by one input.
pub const MAX_QUERIES_PER_INPUT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub persona_prompt: String,
    pub grounding_threshold: f64,
    pub max_grounding_retries: usize,
    pub wake_word: String,
    pub silence_timeout_ms: u64,
    pub tour_mode: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            persona_prompt: DEFAULT_PERSONA.to_string(),
            grounding_threshold: DEFAULT_THRESHOLD,
            max_grounding_retries: 3,
            wake_word: "Dobby".to_string(),
            silence_timeout_ms: 6_000,
            tour_mode: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("max_grounding_retries must be at least 1")]
    NoRetries,
    #[error("silence timeout must be positive")]
    ZeroTimeout,
    #[error("grounding threshold must be in (0, 1], got {0}")]
    Threshold(f64),
    #[error("wake word is empty")]
    EmptyWakeWord,
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_grounding_retries < 1 {
            return Err(EngineError::NoRetries);
        }
        if self.silence_timeout_ms == 0 {
            return Err(EngineError::ZeroTimeout);
        }
        if !(self.grounding_threshold > 0.0 && self.grounding_threshold <= 1.0) {
            return Err(EngineError::Threshold(self.grounding_threshold));
        }
        if self.wake_word.trim().is_empty() {
            return Err(EngineError::EmptyWakeWord);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversationState {
    AwaitingUtterance,
    AwaitingWakeWord,
}

/// Why a query was issued; decides how an `ExecutePlan` in the reply counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    User,
    GroundingRetry,
    Correction,
    Cue,
    Explanation,
}

#[derive(Debug, Default)]
struct Turn {
    events: Vec<AgentEvent>,
    queries: usize,
    grounding_attempts: usize,
    correction_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub conversation: ConversationState,
    pub tour_mode: bool,
    pub robot: RobotSnapshot,
}

pub struct Engine {
    config: AgentConfig,
    backend: Arc<dyn ChatBackend>,
    grounder: Grounder,
    robot: Robot,
    history: HistoryBuffer,
    transcript: Transcript,
    functions: Vec<FunctionDef>,
    state: ConversationState,
    last_activity_ms: u64,
}

impl Engine {
    pub fn new(
        config: AgentConfig,
        lab: &Lab,
        backend: Arc<dyn ChatBackend>,
        embeddings: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let registry = lab.registry()?;
        let prompt = compose_prompt(
            &config.persona_prompt,
            &lab.destinations,
            &topic_pairs(&lab.topics),
            &registry,
            config.tour_mode,
        );
        let grounder = Grounder::new(embeddings, registry)?;
        let robot = Robot::new(lab.sim(), config.tour_mode);
        Ok(Engine {
            functions: function_defs(config.tour_mode),
            config,
            backend,
            grounder,
            robot,
            history: HistoryBuffer::new(prompt),
            transcript: Transcript::default(),
            state: ConversationState::AwaitingUtterance,
            last_activity_ms: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn transcript_mut(&mut self) -> &mut Transcript {
        &mut self.transcript
    }

    pub fn state(&self) -> ConversationState {
        self.state
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    pub fn functions(&self) -> &[FunctionDef] {
        &self.functions
    }

    pub fn now(&self) -> u64 {
        self.robot.clock_ms()
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            conversation: self.state,
            tour_mode: self.config.tour_mode,
            robot: self.robot.snapshot(),
        }
    }

    fn emit(&self, turn: &mut Turn, kind: EventKind) {
        turn.events.push(AgentEvent::new(self.now(), kind));
    }

    fn push_system(&mut self, text: impl Into<String>) {
        let text = text.into();
        let now = self.now();
        self.transcript.push(Speaker::System, text.clone(), now);
        self.history.push(ChatMessage::system(text, now));
    }

    fn note(&self, turn: &mut Turn, text: impl Into<String>) {
        self.emit(turn, EventKind::SystemNote { text: text.into() });
    }

    /// Utterances heard while waiting for the wake word are dropped unless
    /// they contain it.
    pub fn handle_user_utterance(&mut self, text: &str) -> Vec<AgentEvent> {
        let mut turn = Turn::default();
        if self.state == ConversationState::AwaitingWakeWord {
            if !self.detect_wake(text) {
                return turn.events;
            }
            self.state = ConversationState::AwaitingUtterance;
            self.emit(&mut turn, EventKind::Resumed);
        }
        let now = self.now();
        self.last_activity_ms = now;
        self.transcript.push(Speaker::User, text, now);
        self.history.push(ChatMessage::user(text, now));
        self.query(&mut turn, Origin::User);
        turn.events
    }

    pub fn detect_wake(&self, text: &str) -> bool {
        text.to_lowercase()
            .contains(&self.config.wake_word.trim().to_lowercase())
    }

    /// Explicit silence timeout.
    pub fn on_silence_timeout(&mut self) -> Vec<AgentEvent> {
        let mut turn = Turn::default();
        self.enter_wake_wait(&mut turn);
        turn.events
    }

    fn enter_wake_wait(&mut self, turn: &mut Turn) {
        if self.state == ConversationState::AwaitingUtterance {
            self.state = ConversationState::AwaitingWakeWord;
            self.emit(turn, EventKind::AwaitingWake);
        }
    }

    /// Advances simulated time in ticks, handling action boundaries and the
    /// silence timer as they come due.
    pub fn advance(&mut self, ms: u64) -> Vec<AgentEvent> {
        let mut turn = Turn::default();
        let mut left = ms;
        while left > 0 {
            let dt = left.min(TICK_MS);
            left -= dt;
            let exec = self.robot.tick(dt);
            if !exec.is_empty() {
                // each boundary gets its own query budget
                let mut boundary = Turn::default();
                self.on_action_boundary(&mut boundary, exec);
                turn.events.append(&mut boundary.events);
            }
            if self.state == ConversationState::AwaitingUtterance
                && self.now().saturating_sub(self.last_activity_ms) >= self.config.silence_timeout_ms
            {
                self.enter_wake_wait(&mut turn);
            }
        }
        turn.events
    }

    /// Operator cancel from the console.
    pub fn console_cancel(&mut self) -> Vec<AgentEvent> {
        let mut turn = Turn::default();
        let exec = self.robot.cancel();
        if exec.is_empty() {
            self.note(&mut turn, "cancel ignored: no active plan");
        } else {
            self.note(&mut turn, "plan cancelled by the operator");
            self.record_exec_events(&mut turn, exec);
        }
        turn.events
    }

    /// Operator continue from the console.
    pub fn console_continue(&mut self) -> Vec<AgentEvent> {
        let mut turn = Turn::default();
        self.continue_plan(&mut turn);
        turn.events
    }

    /// Dispatches a call as if the model had just issued it.
    pub fn dispatch_function_call(&mut self, call: &FunctionCall) -> Vec<AgentEvent> {
        let mut turn = Turn::default();
        self.dispatch(&mut turn, call, Origin::User);
        turn.events
    }

    fn query(&mut self, turn: &mut Turn, origin: Origin) {
        if turn.queries >= MAX_QUERIES_PER_INPUT {
            self.note(turn, "query budget for this input exhausted");
            return;
        }
        turn.queries += 1;
        match self.backend.complete(self.history.messages(), &self.functions) {
            Ok(reply) => self.handle_reply(turn, reply, origin),
            Err(err) => self.backend_failed(turn, err),
        }
    }

    fn backend_failed(&mut self, turn: &mut Turn, err: BackendError) {
        log::warn!("chat backend failed: {err}");
        self.push_system(format!("The language backend failed: {err}"));
        self.note(turn, format!("backend error: {err}"));
        let apology = match err {
            BackendError::Auth(_) | BackendError::Config(_) => AUTH_APOLOGY,
            _ => APOLOGY,
        };
        self.say(turn, apology);
    }

    fn say(&mut self, turn: &mut Turn, text: &str) {
        let now = self.now();
        self.transcript.push(Speaker::Dobby, text, now);
        self.last_activity_ms = now;
        self.emit(turn, EventKind::RobotDialogue { text: text.to_string() });
    }

    fn handle_reply(&mut self, turn: &mut Turn, reply: ChatMessage, origin: Origin) {
        let now = self.now();
        let reply = reply.restamped(now);
        self.history.push(reply.clone());
        if !reply.content().is_empty() {
            self.transcript.push(Speaker::Dobby, reply.content(), now);
            self.last_activity_ms = now;
            self.emit(turn, EventKind::RobotDialogue { text: reply.content().to_string() });
        }
        if let Some(call) = reply.function_call() {
            self.transcript.push(Speaker::FunctionCall, call.display(), now);
            self.dispatch(turn, call, origin);
        }
    }

    fn dispatch(&mut self, turn: &mut Turn, call: &FunctionCall, origin: Origin) {
        let available = self
            .functions
            .iter()
            .map(|f| f.name.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        match FunctionName::parse(&call.name) {
            None => self.reject_call(turn, format!("Unknown function: {}. Available functions: {available}.", call.name)),
            Some(FunctionName::ExecutePlan) => match parse_execute_plan(&call.arguments) {
                Ok(seq) => self.execute_plan(turn, &seq, origin),
                Err(e) => self.reject_call(
                    turn,
                    format!(
                        "Invalid arguments for ExecutePlan: {e}. Call it with {{\"action_sequence\": [\"<action title>\", ...]}}."
                    ),
                ),
            },
            Some(FunctionName::CancelPlan) => {
                let exec = self.robot.cancel();
                if exec.is_empty() {
                    self.note(turn, "CancelPlan ignored: no active plan");
                } else {
                    self.record_exec_events(turn, exec);
                }
            }
            Some(FunctionName::ContinuePlan) if !self.config.tour_mode => self.reject_call(
                turn,
                format!("Function unavailable: ContinuePlan. Available functions: {available}."),
            ),
            Some(FunctionName::ContinuePlan) => self.continue_plan(turn),
        }
    }

    /// Tells the model what went wrong and asks again, once per input.
    fn reject_call(&mut self, turn: &mut Turn, message: String) {
        self.note(turn, message.clone());
        self.push_system(message);
        if !turn.correction_used {
            turn.correction_used = true;
            self.query(turn, Origin::Correction);
        }
    }

    fn continue_plan(&mut self, turn: &mut Turn) {
        match self.robot.continue_gate() {
            Ok(exec) => self.on_action_boundary(turn, exec),
            Err(e) => self.note(turn, format!("ContinuePlan ignored: {e}")),
        }
    }

    fn execute_plan(&mut self, turn: &mut Turn, sequence: &[String], origin: Origin) {
        let attempt = if origin == Origin::GroundingRetry {
            turn.grounding_attempts + 1
        } else {
            1
        };
        turn.grounding_attempts = attempt;

        let outcome = match self.grounder.ground_plan(sequence, self.config.grounding_threshold) {
            Ok(o) => o,
            Err(e) => {
                self.note(turn, format!("grounding failed: {e}"));
                self.not_capable(turn, format!("grounding failed: {e}"));
                return;
            }
        };
        let plan: Vec<ActionSpec> = match outcome {
            GroundingOutcome::Grounded(items) => items.into_iter().map(|(a, _)| a).collect(),
            GroundingOutcome::Unmatched {
                candidate,
                best_title,
                best_similarity,
                ..
            } => {
                if attempt >= self.config.max_grounding_retries {
                    self.not_capable(turn, format!("no action matches \"{candidate}\""));
                } else {
                    let titles = self.grounder.registry().titles().collect::<Vec<_>>().join(", ");
                    self.push_system(format!(
                        "Error: \"{candidate}\" is not an available action (closest: \"{best_title}\", \
                         similarity {best_similarity:.2}). Call ExecutePlan again using only these action titles: {titles}."
                    ));
                    self.query(turn, Origin::GroundingRetry);
                }
                return;
            }
        };

        match reorder_plan(self.robot.world(), &plan) {
            CorrectionResult::NotCapable { blocked } => {
                self.not_capable(turn, format!("cannot order plan; blocked: {}", blocked.join(", ")));
            }
            CorrectionResult::Corrected { plan, .. } => match self.robot.start(plan) {
                Ok(exec) => self.on_action_boundary(turn, exec),
                Err(ExecError::StalePlan { title, .. }) => {
                    self.not_capable(turn, format!("plan is stale at \"{title}\""));
                }
                Err(e) => self.not_capable(turn, e.to_string()),
            },
        }
    }

    fn not_capable(&mut self, turn: &mut Turn, reason: String) {
        self.emit(turn, EventKind::PlanRejected { reason });
        self.push_system(NOT_CAPABLE_MESSAGE);
        self.query(turn, Origin::Explanation);
    }

    /// Records executor events as system messages and events. Returns whether
    /// an action boundary was crossed.
    fn record_exec_events(&mut self, turn: &mut Turn, exec: Vec<ExecEvent>) -> bool {
        let mut boundary = false;
        for e in exec {
            boundary |= e.is_boundary();
            self.push_system(e.system_message());
            self.emit(turn, e.event_kind());
        }
        boundary
    }

    /// Boundary messages followed by one cue query.
    fn on_action_boundary(&mut self, turn: &mut Turn, exec: Vec<ExecEvent>) {
        if self.record_exec_events(turn, exec) {
            self.query(turn, Origin::Cue);
        }
    }
}
