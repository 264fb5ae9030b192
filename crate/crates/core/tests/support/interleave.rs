//! Exhaustive command interleavings against the executor, with invariant checks.

use dobby_core::executor::{ExecEvent, Phase, Robot};
use dobby_core::sim::{Activity, Lab};
use dobby_core::world::{apply, WorldState};

use super::actions;

pub const FETCH: [&str; 3] = ["Drive to Apple", "Pickup Apple", "Return to User"];
pub const ROUND: [&str; 2] = ["Drive to Banana", "Drive to Drone Cage"];

#[derive(Debug, Clone, Copy)]
pub enum Cmd {
    StartFetch,
    StartRound,
    Cancel,
    Continue,
    /// Run until the executor reports something.
    Finish,
    Tick,
}

pub const CMDS: [Cmd; 6] = [Cmd::StartFetch, Cmd::StartRound, Cmd::Cancel, Cmd::Continue, Cmd::Finish, Cmd::Tick];

#[derive(Clone)]
pub struct Model {
    robot: Robot,
    /// World rebuilt from completion events only.
    expected_world: WorldState,
    open_plans: usize,
    started: usize,
    resolved: usize,
}

impl Model {
    pub fn new(lab: &Lab, tour: bool) -> Self {
        let robot = Robot::new(lab.sim(), tour);
        Model {
            expected_world: robot.world().clone(),
            robot,
            open_plans: 0,
            started: 0,
            resolved: 0,
        }
    }

    fn absorb(&mut self, events: &[ExecEvent], trace: &[Cmd]) {
        let mut saw_completion_since_cancel = false;
        let mut cancelled_at = None;
        for (i, e) in events.iter().enumerate() {
            match e {
                ExecEvent::PlanStarted { .. } => {
                    assert_eq!(self.open_plans, 0, "two plans open: {trace:?}");
                    if let Some(c) = cancelled_at {
                        assert!(c < i && !saw_completion_since_cancel, "override interleaved: {trace:?}");
                    }
                    self.open_plans += 1;
                    self.started += 1;
                }
                ExecEvent::PlanCompleted => {
                    assert_eq!(self.open_plans, 1, "{trace:?}");
                    self.open_plans -= 1;
                    self.resolved += 1;
                }
                ExecEvent::PlanCancelled { .. } => {
                    assert_eq!(self.open_plans, 1, "{trace:?}");
                    self.open_plans -= 1;
                    self.resolved += 1;
                    cancelled_at = Some(i);
                    saw_completion_since_cancel = false;
                }
                ExecEvent::ActionCompleted { action, .. } => {
                    saw_completion_since_cancel = true;
                    self.expected_world = apply(&self.expected_world, action).expect("completed action was applicable");
                }
                _ => {}
            }
        }
    }

    fn run(&mut self, cmd: Cmd, lab: &Lab, trace: &[Cmd]) {
        let events = match cmd {
            Cmd::StartFetch => self.robot.start(actions(lab, &FETCH)).unwrap_or_default(),
            Cmd::StartRound => self.robot.start(actions(lab, &ROUND)).unwrap_or_default(),
            Cmd::Cancel => self.robot.cancel(),
            Cmd::Continue => self.robot.continue_gate().unwrap_or_default(),
            Cmd::Finish => {
                let mut ev = Vec::new();
                for _ in 0..400 {
                    ev = self.robot.tick(100);
                    if !ev.is_empty() {
                        break;
                    }
                }
                ev
            }
            Cmd::Tick => self.robot.tick(100),
        };
        self.absorb(&events, trace);
        self.check(trace);
    }

    fn check(&self, trace: &[Cmd]) {
        let exec = self.robot.executor();
        assert_eq!(self.robot.world(), &self.expected_world, "effects not atomic: {trace:?}");
        let active = !matches!(self.robot.sim().activity(), Activity::Idle);
        match exec.phase() {
            Phase::Idle => {
                assert!(!active, "sim busy while idle: {trace:?}");
                assert_eq!(self.open_plans, 0);
            }
            Phase::Running => {
                assert!(exec.cursor() < exec.plan().unwrap().len());
                assert!(active, "running without activity: {trace:?}");
                assert_eq!(self.open_plans, 1);
            }
            Phase::Gated => {
                assert!(exec.tour_mode(), "gated outside tour mode: {trace:?}");
                assert!(!active, "gated but moving: {trace:?}");
                assert_eq!(self.open_plans, 1);
            }
        }
    }

    /// Brings any open plan to an end.
    fn drain(&mut self, lab: &Lab, trace: &[Cmd]) {
        for _ in 0..20 {
            match self.robot.executor().phase() {
                Phase::Idle => break,
                Phase::Gated => self.run(Cmd::Continue, lab, trace),
                Phase::Running => self.run(Cmd::Finish, lab, trace),
            }
        }
        assert_eq!(self.robot.executor().phase(), Phase::Idle, "{trace:?}");
        assert_eq!(self.started, self.resolved, "unresolved start: {trace:?}");
    }
}

pub fn explore(model: &Model, lab: &Lab, trace: &mut Vec<Cmd>, depth: usize, visited: &mut usize) {
    let mut done = model.clone();
    done.drain(lab, trace);
    *visited += 1;
    if depth == 0 {
        return;
    }
    for cmd in CMDS {
        let mut next = model.clone();
        trace.push(cmd);
        next.run(cmd, lab, trace);
        explore(&next, lab, trace, depth - 1, visited);
        trace.pop();
    }
}

/// Explores every sequence of up to `depth` commands and returns how many
/// prefixes were checked. Panics with the offending trace on any violation.
pub fn explore_all(lab: &Lab, tour: bool, depth: usize) -> usize {
    let mut visited = 0;
    explore(&Model::new(lab, tour), lab, &mut Vec::new(), depth, &mut visited);
    visited
}
