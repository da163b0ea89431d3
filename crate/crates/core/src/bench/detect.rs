use serde::{Deserialize, Serialize};

use crate::message::ToolCall;
use crate::task::TaskInstance;
use crate::tool_spec::ToolName;
use crate::transcript::Transcript;

/// A terminal call that ran one of the task's validation commands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentValidation {
    /// 1-based turn ordinal.
    pub turn: usize,
    pub call_id: String,
}

fn normalize(cmd: &str) -> String {
    cmd.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whether `command` runs one of `validations`: equal after collapsing
/// whitespace, or the validation command followed by extra arguments.
pub fn matches_validation(command: &str, validations: &[String]) -> bool {
    let command = normalize(command);
    validations.iter().map(|v| normalize(v)).filter(|v| !v.is_empty()).any(|v| {
        command == v || command.strip_prefix(&v).is_some_and(|rest| rest.starts_with(' '))
    })
}

/// The command of a terminal call, if `call` is one.
pub fn terminal_command(call: &ToolCall) -> Option<&str> {
    if call.tool_name != ToolName::Terminal.as_str() {
        return None;
    }
    call.arguments.parsed()?.get("command")?.as_str()
}

pub fn is_agent_validation(call: &ToolCall, task: &TaskInstance) -> bool {
    terminal_command(call).is_some_and(|cmd| matches_validation(cmd, &task.validation_commands))
}

/// Every dispatched validation run by the agent, in order.
pub fn agent_validations(transcript: &Transcript, task: &TaskInstance) -> Vec<AgentValidation> {
    transcript
        .dispatched_calls()
        .filter(|(_, call)| is_agent_validation(call, task))
        .map(|(turn, call)| AgentValidation { turn: turn.index + 1, call_id: call.call_id.clone() })
        .collect()
}

/// Turn ordinals of the agent's validation runs (one entry per run).
pub fn detect_agent_validations(transcript: &Transcript, task: &TaskInstance) -> Vec<usize> {
    agent_validations(transcript, task).into_iter().map(|v| v.turn).collect()
}
