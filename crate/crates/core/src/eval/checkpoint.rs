use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agent::Observer;
use crate::bench::detect::is_agent_validation;
use crate::bench::copy_tree;
use crate::message::{ToolCall, ToolResult};
use crate::task::TaskInstance;
use crate::toolkit::Workspace;
use crate::transcript::Transcript;

/// The agent validation whose snapshot decides `pass_in_2_tests`.
pub const CHECKPOINT_VALIDATION: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointResult {
    pub pass_in_2_tests: bool,
    pub pass_in_budget: bool,
    pub turns_used: usize,
    pub validations_used: usize,
}

/// Combine harness validations into the two pass checkpoints.
///
/// `validations` are the turn ordinals of the agent's own validation runs;
/// `snapshot_passes` maps a 1-based validation number to the harness result
/// on the workspace snapshot taken right after it. With two or more agent
/// validations, `pass_in_2_tests` is the result at the second one; with
/// fewer, the run never got past two tests and the final state decides.
/// `pass_in_budget` holds if the task was solved at either point within the
/// budget, so it is implied by `pass_in_2_tests`.
pub fn checkpoints(
    transcript: &Transcript,
    validations: &[usize],
    snapshot_passes: &BTreeMap<usize, bool>,
    final_pass: bool,
    budget: usize,
) -> CheckpointResult {
    let turns_used = transcript.turns.len();
    let within_budget = turns_used <= budget;
    let at_checkpoint = if validations.len() >= CHECKPOINT_VALIDATION {
        snapshot_passes.get(&CHECKPOINT_VALIDATION).copied().unwrap_or(false)
    } else {
        final_pass
    };
    let pass_in_2_tests = at_checkpoint && within_budget;
    CheckpointResult {
        pass_in_2_tests,
        pass_in_budget: (final_pass && within_budget) || pass_in_2_tests,
        turns_used,
        validations_used: validations.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotMode {
    /// Copy the workspace after every agent validation.
    #[default]
    All,
    /// Copy only at the checkpoint validation.
    CheckpointOnly,
}

/// Copies the workspace to `<run dir>/snap-<n>` after the agent's n-th
/// validation command.
pub struct SnapshotObserver<'a> {
    task: &'a TaskInstance,
    dir: PathBuf,
    mode: SnapshotMode,
    seen: usize,
    pub snapshots: BTreeMap<usize, PathBuf>,
    pub errors: Vec<String>,
}

impl<'a> SnapshotObserver<'a> {
    pub fn new(task: &'a TaskInstance, dir: PathBuf, mode: SnapshotMode) -> Self {
        Self { task, dir, mode, seen: 0, snapshots: BTreeMap::new(), errors: Vec::new() }
    }

    pub fn validations_seen(&self) -> usize {
        self.seen
    }
}

impl Observer for SnapshotObserver<'_> {
    fn after_call(&mut self, _turn: usize, call: &ToolCall, _result: &ToolResult, ws: &Workspace) {
        if !is_agent_validation(call, self.task) {
            return;
        }
        self.seen += 1;
        if self.mode == SnapshotMode::CheckpointOnly && self.seen != CHECKPOINT_VALIDATION {
            return;
        }
        let target = self.dir.join(format!("snap-{}", self.seen));
        match copy_tree(ws.root(), &target) {
            Ok(()) => {
                self.snapshots.insert(self.seen, target);
            }
            Err(e) => self.errors.push(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transcript(turns: usize) -> Transcript {
        let mut t = Transcript::new("t", "lita");
        for i in 0..turns {
            t.turns.push(crate::transcript::Turn {
                index: i,
                assistant: crate::message::Message::assistant("", vec![]),
                results: vec![],
                usage: Default::default(),
                nudged: true,
                skipped: vec![],
            });
        }
        t
    }

    #[test]
    fn solved_before_any_validation() {
        let r = checkpoints(&transcript(3), &[], &BTreeMap::new(), true, 50);
        assert!(r.pass_in_2_tests && r.pass_in_budget);
        assert_eq!((r.turns_used, r.validations_used), (3, 0));
    }

    #[test]
    fn solved_at_third_validation() {
        let snaps = BTreeMap::from([(1, false), (2, false), (3, true)]);
        let r = checkpoints(&transcript(9), &[2, 4, 7], &snaps, true, 50);
        assert!(!r.pass_in_2_tests && r.pass_in_budget);
    }

    #[test]
    fn unsolved() {
        let r = checkpoints(&transcript(50), &[3, 5], &BTreeMap::from([(2, false)]), false, 50);
        assert!(!r.pass_in_2_tests && !r.pass_in_budget);
    }

    #[test]
    fn solved_at_checkpoint_then_broken_still_counts_within_budget() {
        let r = checkpoints(&transcript(9), &[2, 4, 7], &BTreeMap::from([(2, true)]), false, 50);
        assert!(r.pass_in_2_tests && r.pass_in_budget);
    }
}
