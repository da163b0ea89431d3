use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::task::TaskInstance;
use crate::toolkit::{run_command, truncate_middle, ExitCode};

/// Characters of command output kept in a validation record.
pub const EXCERPT_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    /// 1-based position in the run's validation log.
    pub index: usize,
    pub command: String,
    pub exit_code: ExitCode,
    pub passed: bool,
    pub output_excerpt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Stop at the first failing command.
    pub short_circuit: bool,
    pub timeout: Duration,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { short_circuit: true, timeout: Duration::from_secs(600) }
    }
}

/// Run the task's validation commands in order, each in a fresh subshell
/// at `root`. Ordinals start at `first_index`.
pub fn validate(task: &TaskInstance, root: &Path, options: ValidateOptions, first_index: usize) -> Vec<ValidationOutcome> {
    let mut outcomes = Vec::new();
    for command in task.validation_commands.iter().filter(|c| !c.trim().is_empty()) {
        let index = first_index + outcomes.len();
        let outcome = match run_command(root, command, options.timeout) {
            Ok(r) => {
                let (output_excerpt, _) = truncate_middle(&r.render(), EXCERPT_CAP, EXCERPT_CAP / 2);
                ValidationOutcome { index, command: command.clone(), exit_code: r.exit, passed: r.exit.success(), output_excerpt }
            }
            Err(e) => ValidationOutcome {
                index,
                command: command.clone(),
                exit_code: ExitCode::Exited(-1),
                passed: false,
                output_excerpt: format!("could not start the command: {e}"),
            },
        };
        let failed = !outcome.passed;
        outcomes.push(outcome);
        if failed && options.short_circuit {
            break;
        }
    }
    outcomes
}

/// Whether every command ran and passed.
pub fn all_passed(task: &TaskInstance, outcomes: &[ValidationOutcome]) -> bool {
    let expected = task.validation_commands.iter().filter(|c| !c.trim().is_empty()).count();
    outcomes.len() == expected && outcomes.iter().all(|o| o.passed)
}

/// One record of a validation log: which workspace state was checked, and
/// the outcome of one command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub checkpoint: String,
    #[serde(flatten)]
    pub outcome: ValidationOutcome,
}

/// Line-delimited validation log with ordinals that keep counting across
/// appends.
pub struct ValidationLog {
    file: Option<File>,
    next_index: usize,
    records: Vec<ValidationRecord>,
}

impl ValidationLog {
    /// A log that is only kept in memory.
    pub fn in_memory() -> Self {
        Self { file: None, next_index: 1, records: Vec::new() }
    }

    pub fn create(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        Ok(Self { file: Some(file), next_index: 1, records: Vec::new() })
    }

    /// Validate `root` and append the outcomes under `checkpoint`.
    pub fn run(
        &mut self,
        checkpoint: &str,
        task: &TaskInstance,
        root: &Path,
        options: ValidateOptions,
    ) -> io::Result<Vec<ValidationOutcome>> {
        let outcomes = validate(task, root, options, self.next_index);
        self.next_index += outcomes.len();
        for outcome in &outcomes {
            let record = ValidationRecord { checkpoint: checkpoint.to_string(), outcome: outcome.clone() };
            if let Some(file) = &mut self.file {
                serde_json::to_writer(&mut *file, &record)?;
                file.write_all(b"\n")?;
            }
            self.records.push(record);
        }
        if let Some(file) = &mut self.file {
            file.flush()?;
        }
        Ok(outcomes)
    }

    pub fn records(&self) -> &[ValidationRecord] {
        &self.records
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(commands: &[&str]) -> TaskInstance {
        TaskInstance {
            id: "t".into(),
            language_tag: String::new(),
            initial_state: "s".into(),
            task_description: "d".into(),
            output_state: "o".into(),
            validation_steps: "v".into(),
            validation_commands: commands.iter().map(|c| c.to_string()).collect(),
            workspace_seed: vec![],
        }
    }

    #[test]
    fn exit_status_decides() {
        let dir = tempfile::tempdir().unwrap();
        let pass = validate(&task(&["exit 0"]), dir.path(), ValidateOptions::default(), 1);
        assert!(pass[0].passed && pass[0].exit_code == ExitCode::Exited(0));
        let fail = validate(&task(&["exit 1"]), dir.path(), ValidateOptions::default(), 1);
        assert!(!fail[0].passed);
    }

    #[test]
    fn short_circuit_is_configurable() {
        let dir = tempfile::tempdir().unwrap();
        let t = task(&["exit 1", "exit 0"]);
        assert_eq!(validate(&t, dir.path(), ValidateOptions::default(), 1).len(), 1);
        let all = ValidateOptions { short_circuit: false, ..Default::default() };
        let outcomes = validate(&t, dir.path(), all, 5);
        assert_eq!(outcomes.iter().map(|o| o.index).collect::<Vec<_>>(), [5, 6]);
        assert!(!all_passed(&t, &outcomes));
    }

    #[test]
    fn log_ordinals_are_global() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("validation.jsonl");
        let mut log = ValidationLog::create(&path).unwrap();
        let t = task(&["true", "echo out"]);
        log.run("snap-1", &t, dir.path(), ValidateOptions::default()).unwrap();
        let second = log.run("final", &t, dir.path(), ValidateOptions::default()).unwrap();
        assert_eq!(second[1].index, 4);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        let last: ValidationRecord = serde_json::from_str(text.lines().last().unwrap()).unwrap();
        assert_eq!(last.checkpoint, "final");
        assert_eq!(last.outcome.output_excerpt, "out\n[exit code: 0]");
    }
}
