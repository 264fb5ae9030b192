mod support;

use dobby_core::executor::{ExecEvent, Phase, Robot};
use dobby_core::world::{apply, ActionSpec};
use support::interleave::{explore_all, FETCH, ROUND};
use support::{actions, fixture_lab};

#[test]
fn exhaustive_interleavings_up_to_six() {
    let lab = fixture_lab();
    for tour in [false, true] {
        let visited = explore_all(&lab, tour, 6);
        assert_eq!(visited, (0..=6).map(|k| 6usize.pow(k)).sum::<usize>());
    }
}

fn finish(robot: &mut Robot) -> Vec<ExecEvent> {
    for _ in 0..400 {
        let ev = robot.tick(100);
        if !ev.is_empty() {
            return ev;
        }
    }
    panic!("nothing finished");
}

#[test]
fn cancel_during_second_of_three_keeps_first_effects_only() {
    let lab = fixture_lab();
    let mut robot = Robot::new(lab.sim(), false);
    let before = robot.world().clone();
    let plan: Vec<ActionSpec> = actions(&lab, &FETCH);
    robot.start(plan.clone()).unwrap();
    finish(&mut robot);
    robot.tick(100);
    let ev = robot.cancel();
    assert_eq!(
        ev,
        [ExecEvent::PlanCancelled {
            completed: 1,
            remaining: vec!["Pickup Apple".into(), "Return to User".into()],
        }]
    );
    assert_eq!(robot.world(), &apply(&before, &plan[0]).unwrap());
    assert!(robot.world().holds_atom("gripper_empty"));
}

#[test]
fn cancelled_drive_keeps_pose_without_destination_fact() {
    let lab = fixture_lab();
    let mut robot = Robot::new(lab.sim(), false);
    robot.start(actions(&lab, &FETCH)).unwrap();
    for _ in 0..20 {
        robot.tick(100);
    }
    robot.cancel();
    let pose = robot.sim().pose();
    assert!(pose.x > 0.5 && pose.x < 2.5, "{pose:?}");
    assert!(!robot.world().holds_atom("robot_at:apple_table"));
    assert!(robot.world().holds_atom("robot_at:front_desk"));
    robot.tick(100);
    assert_eq!(robot.sim().pose(), pose);
}

#[test]
fn tour_plan_of_three_needs_two_continues() {
    let lab = fixture_lab();
    let mut robot = Robot::new(lab.sim(), true);
    robot.start(actions(&lab, &FETCH)).unwrap();
    let mut continues = 0;
    loop {
        let ev = match robot.executor().phase() {
            Phase::Gated => {
                continues += 1;
                robot.continue_gate().unwrap()
            }
            Phase::Running => finish(&mut robot),
            Phase::Idle => break,
        };
        if ev.contains(&ExecEvent::PlanCompleted) {
            break;
        }
    }
    assert_eq!(continues, 2);
    assert!(robot.world().holds_atom("holding:apple"));
    assert!(robot.continue_gate().is_err());
}

#[test]
fn override_cancels_then_starts() {
    let lab = fixture_lab();
    let mut robot = Robot::new(lab.sim(), false);
    robot.start(actions(&lab, &FETCH)).unwrap();
    robot.tick(100);
    let ev = robot.start(actions(&lab, &ROUND)).unwrap();
    assert!(matches!(ev[0], ExecEvent::PlanCancelled { completed: 0, .. }));
    assert!(matches!(ev[1], ExecEvent::PlanStarted { .. }));
    assert!(matches!(&ev[2], ExecEvent::ActionStarted { index: 0, action } if action.title() == "Drive to Banana"));
    assert_eq!(ev.len(), 3);
}

#[test]
fn replaying_a_finished_fetch_is_stale() {
    let lab = fixture_lab();
    let mut robot = Robot::new(lab.sim(), false);
    robot.start(actions(&lab, &FETCH)).unwrap();
    while !finish(&mut robot).contains(&ExecEvent::PlanCompleted) {}
    let err = robot.start(actions(&lab, &FETCH)).unwrap_err();
    assert_eq!(err.to_string(), "plan is no longer executable: `Pickup Apple` (step 2) cannot run in the current state");
}
