//! Conversational agent runtime for a simulated service robot.
//!
//! Free-form dialogue goes to a chat backend; function calls the model emits
//! are grounded onto registered actions, reordered until executable, and run
//! on a kinematic simulation while the conversation continues.

pub mod agent;
pub mod backend;
pub mod baseline;
pub mod chat;
pub mod correction;
pub mod events;
pub mod executor;
pub mod grounding;
pub mod prompt;
pub mod session;
pub mod sim;
pub mod speech;
pub mod world;

pub use agent::{AgentConfig, ConversationState, Engine};
pub use events::{AgentEvent, EventKind, Speaker, Transcript, TranscriptEntry};
pub use session::{Input, Mode, Session, SessionMetrics};
