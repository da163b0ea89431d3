//! Benchmark tasks as agent inputs: the four-section user prompt, per-run
//! workspaces, validation and source-format importers.

pub mod detect;
pub mod import;
pub mod validate;
pub mod workspace;

use crate::task::TaskInstance;

pub use detect::{detect_agent_validations, matches_validation, AgentValidation};
pub use validate::{validate, ValidateOptions, ValidationLog, ValidationOutcome};
pub use workspace::{copy_tree, materialize_workspace, run_dir, sanitize_task_id, tree_digest, BenchError};

pub const SECTION_HEADERS: [&str; 4] =
    ["## Initial State", "## Task Description", "## Output State", "## Validation Steps"];

fn push_body(out: &mut String, body: &str) {
    for line in body.split_inclusive('\n') {
        if SECTION_HEADERS.iter().any(|h| line.starts_with(h)) || line.starts_with('\\') && is_escaped_header(line) {
            out.push('\\');
        }
        out.push_str(line);
    }
    if !out.ends_with('\n') {
        out.push('\n');
    }
}

/// Lines that already look like an escaped header get one more backslash so
/// the escape stays reversible.
fn is_escaped_header(line: &str) -> bool {
    let stripped = line.trim_start_matches('\\');
    SECTION_HEADERS.iter().any(|h| stripped.starts_with(h))
}

/// The initial user message. Depends on the task fields only. A body line
/// that would read as a section header is prefixed with a backslash.
pub fn render_prompt(task: &TaskInstance) -> String {
    let bodies = [&task.initial_state, &task.task_description, &task.output_state, &task.validation_steps];
    let mut out = String::new();
    for (i, (header, body)) in SECTION_HEADERS.iter().zip(bodies).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(header);
        out.push('\n');
        push_body(&mut out, body);
    }
    out
}
