//! Greedy plan correction.
//!
//! Repeatedly picks the first remaining action whose preconditions hold,
//! appends it to the output and advances the simulated state. If no remaining
//! action is applicable the whole plan is rejected. There is no lookahead, so
//! the procedure can reject sequences for which some other order would work.

use crate::world::{apply, is_applicable, ActionSpec, WorldState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorrectionResult {
    Corrected {
        plan: Vec<ActionSpec>,
        /// `order[i]` is the input position of `plan[i]`.
        order: Vec<usize>,
    },
    NotCapable {
        /// Titles still unplaced when the scan got stuck, in remaining order.
        blocked: Vec<String>,
    },
}

impl CorrectionResult {
    pub fn plan(&self) -> Option<&[ActionSpec]> {
        match self {
            CorrectionResult::Corrected { plan, .. } => Some(plan),
            CorrectionResult::NotCapable { .. } => None,
        }
    }
}

pub fn reorder_plan(initial_state: &WorldState, sequence: &[ActionSpec]) -> CorrectionResult {
    // Positions, so duplicate instances stay distinct.
    let mut remaining: Vec<usize> = (0..sequence.len()).collect();
    let mut state = initial_state.clone();
    let mut order = Vec::with_capacity(sequence.len());

    while !remaining.is_empty() {
        let Some(slot) = remaining
            .iter()
            .position(|&i| is_applicable(&state, &sequence[i]))
        else {
            return CorrectionResult::NotCapable {
                blocked: remaining
                    .iter()
                    .map(|&i| sequence[i].title().to_string())
                    .collect(),
            };
        };
        let chosen = remaining.remove(slot);
        state = apply(&state, &sequence[chosen]).expect("applicability checked above");
        order.push(chosen);
    }

    CorrectionResult::Corrected {
        plan: order.iter().map(|&i| sequence[i].clone()).collect(),
        order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::check_plan;
    use crate::world::fixtures::*;

    fn titles(r: &CorrectionResult) -> Vec<&str> {
        r.plan().unwrap().iter().map(|a| a.title()).collect()
    }

    #[test]
    fn valid_order_is_kept() {
        let s = state(&["gripper_empty", "robot_at:home"]);
        let r = reorder_plan(&s, &[drive_to_apple(), pickup_apple()]);
        assert_eq!(titles(&r), ["Drive to Apple", "Pickup Apple"]);
    }

    #[test]
    fn swaps_pickup_behind_drive() {
        let s = state(&["gripper_empty", "robot_at:home"]);
        let r = reorder_plan(&s, &[pickup_apple(), drive_to_apple()]);
        assert_eq!(titles(&r), ["Drive to Apple", "Pickup Apple"]);
        assert!(check_plan(&s, r.plan().unwrap()).is_valid());
        if let CorrectionResult::Corrected { order, .. } = r {
            assert_eq!(order, [1, 0]);
        }
    }

    #[test]
    fn stuck_reports_blocked_titles() {
        let s = state(&["gripper_empty", "robot_at:apple_table"]);
        let seq = [pickup_apple(), pickup_banana()];
        assert_eq!(
            reorder_plan(&s, &seq),
            CorrectionResult::NotCapable {
                blocked: vec!["Pickup Banana".into()]
            }
        );
        // neither permutation is executable
        assert!(!check_plan(&s, &seq).is_valid());
        assert!(!check_plan(&s, &[pickup_banana(), pickup_apple()]).is_valid());
    }

    #[test]
    fn first_applicable_wins() {
        let s = state(&["gripper_empty", "robot_at:home"]);
        let r = reorder_plan(&s, &[pickup_apple(), return_to_user(), drive_to_apple()]);
        assert_eq!(titles(&r), ["Return to User", "Drive to Apple", "Pickup Apple"]);
        assert!(check_plan(&s, r.plan().unwrap()).is_valid());
    }

    #[test]
    fn empty_and_duplicates() {
        let s = state(&["gripper_empty"]);
        assert_eq!(
            reorder_plan(&s, &[]),
            CorrectionResult::Corrected {
                plan: vec![],
                order: vec![]
            }
        );
        let seq = [drive_to_apple(), pickup_apple(), drive_to_apple()];
        let r = reorder_plan(&s, &seq);
        if let CorrectionResult::Corrected { order, .. } = &r {
            assert_eq!(order, &[0, 1, 2]);
        } else {
            panic!("expected corrected");
        }
    }
}
