//! Sequential, non-blocking plan execution.
//!
//! [`Executor`] is the symbolic state machine: it owns the world state and the
//! active plan and applies an action's effects only when that action finishes.
//! [`Robot`] pairs it with the simulator and advances both tick by tick.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::EventKind;
use crate::sim::{SimSnapshot, SimWorld};
use crate::world::{apply, check_plan, ActionSpec, PlanCheck, WorldState};

/// Simulation step granularity; cancellation takes effect at this resolution.
pub const TICK_MS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Running,
    Gated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecEvent {
    PlanStarted { titles: Vec<String> },
    ActionStarted { index: usize, action: ActionSpec },
    ActionCompleted { index: usize, action: ActionSpec },
    /// Tour mode: `next` waits for a continue.
    Gated { next: usize, title: String },
    PlanCompleted,
    PlanCancelled { completed: usize, remaining: Vec<String> },
    /// The simulator refused to begin an action; the plan is cancelled right after.
    ActionFailed { index: usize, title: String, reason: String },
}

impl ExecEvent {
    /// Text injected into the conversation history for this event.
    pub fn system_message(&self) -> String {
        match self {
            ExecEvent::PlanStarted { titles } => {
                let listed = titles
                    .iter()
                    .enumerate()
                    .map(|(i, t)| format!("{}. {t}", i + 1))
                    .collect::<Vec<_>>()
                    .join(" ");
                format!("Executing plan: {listed}")
            }
            ExecEvent::ActionStarted { action, .. } => format!("Starting action: {}", action.title()),
            ExecEvent::ActionCompleted { action, .. } => format!("Finished action: {}", action.title()),
            ExecEvent::Gated { title, .. } => {
                format!("Next action waiting: {title}. Call ContinuePlan when the user is ready to move on.")
            }
            ExecEvent::PlanCompleted => "Plan completed.".to_string(),
            ExecEvent::PlanCancelled { remaining, .. } => {
                format!("Plan cancelled. Actions not performed: {}.", remaining.join(", "))
            }
            ExecEvent::ActionFailed { title, reason, .. } => format!("Action failed: {title} ({reason})."),
        }
    }

    pub fn event_kind(&self) -> EventKind {
        match self {
            ExecEvent::PlanStarted { titles } => EventKind::PlanStarted { actions: titles.clone() },
            ExecEvent::ActionStarted { index, action } => EventKind::ActionStarted {
                index: *index,
                title: action.title().to_string(),
            },
            ExecEvent::ActionCompleted { index, action } => EventKind::ActionCompleted {
                index: *index,
                title: action.title().to_string(),
                behavior: action.behavior().to_string(),
            },
            ExecEvent::Gated { .. } => EventKind::SystemNote { text: self.system_message() },
            ExecEvent::PlanCompleted => EventKind::PlanCompleted,
            ExecEvent::PlanCancelled { completed, remaining } => EventKind::PlanCancelled {
                completed: *completed,
                remaining: remaining.clone(),
            },
            ExecEvent::ActionFailed { title, reason, .. } => EventKind::SystemNote {
                text: format!("action {title} failed: {reason}"),
            },
        }
    }

    /// Whether an action began or ended.
    pub fn is_boundary(&self) -> bool {
        matches!(self, ExecEvent::ActionStarted { .. } | ExecEvent::ActionCompleted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("plan is no longer executable: `{title}` (step {}) cannot run in the current state", index + 1)]
    StalePlan { index: usize, title: String },
    #[error("plan is empty")]
    EmptyPlan,
    #[error("no plan is waiting to continue")]
    NotGated,
}

#[derive(Debug, Clone)]
pub struct Executor {
    tour_mode: bool,
    phase: Phase,
    plan: Vec<ActionSpec>,
    cursor: usize,
    world: WorldState,
}

impl Executor {
    pub fn new(world: WorldState, tour_mode: bool) -> Self {
        Executor {
            tour_mode,
            phase: Phase::Idle,
            plan: Vec::new(),
            cursor: 0,
            world,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn plan(&self) -> Option<&[ActionSpec]> {
        (self.phase != Phase::Idle).then_some(self.plan.as_slice())
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn tour_mode(&self) -> bool {
        self.tour_mode
    }

    pub fn current_action(&self) -> Option<&ActionSpec> {
        match self.phase {
            Phase::Running => self.plan.get(self.cursor),
            _ => None,
        }
    }

    /// Revalidates against the current world, cancels any active plan, then
    /// starts the first action.
    pub fn start(&mut self, plan: Vec<ActionSpec>) -> Result<Vec<ExecEvent>, ExecError> {
        if plan.is_empty() {
            return Err(ExecError::EmptyPlan);
        }
        if let PlanCheck::Invalid { first_failing_index } = check_plan(&self.world, &plan) {
            return Err(ExecError::StalePlan {
                index: first_failing_index,
                title: plan[first_failing_index].title().to_string(),
            });
        }
        let mut events = self.cancel();
        events.push(ExecEvent::PlanStarted {
            titles: plan.iter().map(|a| a.title().to_string()).collect(),
        });
        self.plan = plan;
        self.cursor = 0;
        self.phase = Phase::Running;
        events.push(ExecEvent::ActionStarted {
            index: 0,
            action: self.plan[0].clone(),
        });
        Ok(events)
    }

    /// Applies the running action's effects and moves on.
    pub fn on_action_finished(&mut self) -> Vec<ExecEvent> {
        if self.phase != Phase::Running {
            return Vec::new();
        }
        let action = self.plan[self.cursor].clone();
        self.world = apply(&self.world, &action).expect("plan validated against this world");
        let index = self.cursor;
        let mut events = vec![ExecEvent::ActionCompleted { index, action }];
        self.cursor += 1;
        if self.cursor == self.plan.len() {
            self.finish();
            events.push(ExecEvent::PlanCompleted);
        } else if self.tour_mode {
            self.phase = Phase::Gated;
            events.push(ExecEvent::Gated {
                next: self.cursor,
                title: self.plan[self.cursor].title().to_string(),
            });
        } else {
            events.push(ExecEvent::ActionStarted {
                index: self.cursor,
                action: self.plan[self.cursor].clone(),
            });
        }
        events
    }

    /// No-op when idle.
    pub fn cancel(&mut self) -> Vec<ExecEvent> {
        if self.phase == Phase::Idle {
            return Vec::new();
        }
        let completed = self.cursor;
        let remaining = self.plan[self.cursor..]
            .iter()
            .map(|a| a.title().to_string())
            .collect();
        self.finish();
        vec![ExecEvent::PlanCancelled { completed, remaining }]
    }

    pub fn continue_gate(&mut self) -> Result<Vec<ExecEvent>, ExecError> {
        if self.phase != Phase::Gated {
            return Err(ExecError::NotGated);
        }
        self.phase = Phase::Running;
        Ok(vec![ExecEvent::ActionStarted {
            index: self.cursor,
            action: self.plan[self.cursor].clone(),
        }])
    }

    fn finish(&mut self) {
        self.phase = Phase::Idle;
        self.plan.clear();
        self.cursor = 0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSnapshot {
    pub phase: Phase,
    pub plan: Vec<String>,
    pub cursor: usize,
    pub world: Vec<String>,
    pub sim: SimSnapshot,
}

/// Executor driving the simulator.
#[derive(Debug, Clone)]
pub struct Robot {
    executor: Executor,
    sim: SimWorld,
}

impl Robot {
    pub fn new(sim: SimWorld, tour_mode: bool) -> Self {
        let world = sim.symbolic_state();
        Robot {
            executor: Executor::new(world, tour_mode),
            sim,
        }
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    pub fn sim(&self) -> &SimWorld {
        &self.sim
    }

    pub fn world(&self) -> &WorldState {
        self.executor.world()
    }

    pub fn clock_ms(&self) -> u64 {
        self.sim.clock_ms()
    }

    pub fn snapshot(&self) -> RobotSnapshot {
        RobotSnapshot {
            phase: self.executor.phase(),
            plan: self
                .executor
                .plan()
                .unwrap_or_default()
                .iter()
                .map(|a| a.title().to_string())
                .collect(),
            cursor: self.executor.cursor(),
            world: self.world().facts().map(|p| p.to_string()).collect(),
            sim: self.sim.snapshot(),
        }
    }

    pub fn start(&mut self, plan: Vec<ActionSpec>) -> Result<Vec<ExecEvent>, ExecError> {
        let events = self.executor.start(plan)?;
        self.sim.halt();
        Ok(self.begin_started(events))
    }

    pub fn cancel(&mut self) -> Vec<ExecEvent> {
        self.sim.halt();
        self.executor.cancel()
    }

    pub fn continue_gate(&mut self) -> Result<Vec<ExecEvent>, ExecError> {
        let events = self.executor.continue_gate()?;
        Ok(self.begin_started(events))
    }

    /// One simulation step; callers keep `dt_ms` at or below [`TICK_MS`].
    pub fn tick(&mut self, dt_ms: u64) -> Vec<ExecEvent> {
        if self.sim.step(dt_ms).is_none() || self.executor.phase() != Phase::Running {
            return Vec::new();
        }
        let events = self.executor.on_action_finished();
        self.begin_started(events)
    }

    fn begin_started(&mut self, mut events: Vec<ExecEvent>) -> Vec<ExecEvent> {
        let started = events.iter().find_map(|e| match e {
            ExecEvent::ActionStarted { index, action } => Some((*index, action.clone())),
            _ => None,
        });
        if let Some((index, action)) = started {
            if let Err(err) = self.sim.begin(action.behavior()) {
                events.push(ExecEvent::ActionFailed {
                    index,
                    title: action.title().to_string(),
                    reason: err.to_string(),
                });
                events.extend(self.executor.cancel());
            }
        }
        events
    }
}
