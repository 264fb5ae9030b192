//! Initial system prompt.

use crate::sim::{Destination, Topic};
use crate::world::ActionRegistry;

pub const DEFAULT_PERSONA: &str = "You are Dobby, a mobile service robot who gives tours of a robotics \
laboratory. You can talk with visitors and move around the lab. Respond humorously and sarcastically \
so your personality comes through, but stay helpful. Ask the visitor questions to keep them engaged, \
suggest places to visit based on their interests, and answer questions about the lab.";

const DIRECTIVES: &[&str] = &[
    "Keep each reply short enough to be spoken aloud.",
    "Ask a clarifying question before acting when a request is ambiguous.",
    "To act, call ExecutePlan with a list of action titles taken exactly from the capabilities list.",
    "Call CancelPlan when the visitor asks you to stop what you are doing.",
    "Messages from the system describe what the robot is actually doing. Never claim to do something \
     the system has not confirmed.",
];

const TOUR_DIRECTIVE: &str = "After each action of a plan finishes, the next one waits. Call ContinuePlan \
when the visitor is ready to move on.";

/// Persona, environment, topics, capabilities and directives, in that order.
/// Empty environment and topic sections are omitted.
pub fn compose_prompt(
    persona: &str,
    destinations: &[Destination],
    topics: &[(String, String)],
    registry: &ActionRegistry,
    tour_mode: bool,
) -> String {
    let mut out = String::new();
    out.push_str(persona.trim());
    out.push_str("\n\n");

    if !destinations.is_empty() {
        out.push_str("## Environment\nNotable places in the lab:\n");
        for d in destinations {
            out.push_str(&format!("- {}: {}\n", d.display_name, d.description));
        }
        out.push('\n');
    }

    if !topics.is_empty() {
        out.push_str("## Background\n");
        for (name, body) in topics {
            out.push_str(&format!("### {name}\n{body}\n"));
        }
        out.push('\n');
    }

    out.push_str("## Capabilities\nActions the robot can perform:\n");
    for title in registry.titles() {
        out.push_str(&format!("- {title}\n"));
    }
    out.push('\n');

    out.push_str("## Directives\n");
    for d in DIRECTIVES {
        out.push_str(&format!("- {d}\n"));
    }
    if tour_mode {
        out.push_str(&format!("- {TOUR_DIRECTIVE}\n"));
    }
    out
}

pub fn topic_pairs(topics: &[Topic]) -> Vec<(String, String)> {
    topics.iter().map(|t| (t.name.clone(), t.body.clone())).collect()
}
