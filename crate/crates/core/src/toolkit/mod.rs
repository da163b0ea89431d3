//! The tool registry and dispatch. Every call produces exactly one result;
//! tool failures become `ok=false` results for the model to read.

pub mod editor;
pub mod search;
pub mod terminal;
pub mod truncate;
pub mod workspace;

use std::time::Duration;

use serde_json::{Map, Value};

use crate::config::{AgentConfig, EditFormat, MemoryStrategy, ToolSettings, Variant};
use crate::edits::{EditLedger, EditOperation};
use crate::memory::Memory;
use crate::message::{ToolCall, ToolResult};
use crate::tool_spec::{ToolName, ToolSpec};

pub use terminal::{run_command, ExecResult, ExitCode};
pub use truncate::truncate_middle;
pub use workspace::{SandboxError, Workspace};

pub const THINK_ACK: &str = "Thought recorded.";
pub const PLAN_ACK: &str = "Plan recorded.";
pub const FINISH_ACK: &str = "Finished.";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolkitError {
    #[error("unknown tool `{0}` in enabled_tools")]
    UnknownTool(String),
}

fn spec_text(name: ToolName, format: EditFormat) -> &'static str {
    match name {
        ToolName::Editor => match format {
            EditFormat::StringReplace => include_str!("../../assets/tools/editor.toml"),
            EditFormat::DiffBlock => include_str!("../../assets/tools/editor_diff.toml"),
        },
        ToolName::Terminal => include_str!("../../assets/tools/terminal.toml"),
        ToolName::Search => include_str!("../../assets/tools/search.toml"),
        ToolName::Finish => include_str!("../../assets/tools/finish.toml"),
        ToolName::Think => include_str!("../../assets/tools/think.toml"),
        ToolName::Plan => include_str!("../../assets/tools/plan.toml"),
        ToolName::Summary => include_str!("../../assets/tools/summary.toml"),
    }
}

/// The shipped description of one tool.
pub fn tool_spec(name: ToolName, format: EditFormat) -> ToolSpec {
    ToolSpec::from_toml(spec_text(name, format)).expect("shipped tool descriptions are valid")
}

/// The canonical tool set of a variant.
pub fn default_tools(variant: Variant, memory: MemoryStrategy) -> Vec<ToolName> {
    use ToolName::*;
    let mut tools = match variant {
        Variant::Lita | Variant::LitaDiff => vec![Editor, Terminal, Search, Finish, Think, Plan],
        Variant::LitaMini => vec![Terminal, Finish],
        Variant::LitaReason => vec![Terminal, Think, Plan, Finish],
    };
    if memory == MemoryStrategy::Summarized && matches!(variant, Variant::Lita | Variant::LitaDiff) {
        tools.push(Summary);
    }
    tools
}

/// The tool specs exposed to the model for `config`.
pub fn registry_for(config: &AgentConfig) -> Result<Vec<ToolSpec>, ToolkitError> {
    let names = match &config.enabled_tools {
        Some(list) => {
            let mut names: Vec<ToolName> = Vec::new();
            for raw in list {
                let name: ToolName = raw.parse().map_err(|_| ToolkitError::UnknownTool(raw.clone()))?;
                if !names.contains(&name) {
                    names.push(name);
                }
            }
            names
        }
        None => default_tools(config.variant, config.memory_strategy),
    };
    Ok(names.into_iter().map(|n| tool_spec(n, config.edit_format())).collect())
}

/// Everything a tool may touch during one call.
pub struct ToolContext<'a> {
    pub workspace: &'a Workspace,
    pub memory: &'a mut Memory,
    pub ledger: &'a mut EditLedger,
    pub settings: &'a ToolSettings,
    pub edit_format: EditFormat,
    pub registry: &'a [ToolSpec],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Finish,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispatched {
    pub result: ToolResult,
    pub control: Control,
}

struct Args<'a> {
    map: &'a Map<String, Value>,
}

impl<'a> Args<'a> {
    fn text(&self, name: &str) -> Option<&'a str> {
        self.map.get(name).and_then(Value::as_str)
    }

    fn int(&self, name: &str) -> Option<i64> {
        self.map.get(name).and_then(Value::as_i64)
    }

    fn bool(&self, name: &str) -> Option<bool> {
        self.map.get(name).and_then(Value::as_bool)
    }

    fn need_text(&self, name: &str, command: &str) -> Result<&'a str, String> {
        self.text(name).ok_or_else(|| format!("parameter `{name}` is required for {command}"))
    }
}

fn check_args<'a>(spec: &ToolSpec, call: &'a ToolCall) -> Result<&'a Map<String, Value>, String> {
    let map = call.arguments.parsed().ok_or_else(|| {
        format!("could not parse the arguments of `{}` as a JSON object", call.tool_name)
    })?;
    for p in &spec.parameters {
        match map.get(&p.name) {
            None | Some(Value::Null) if p.required => {
                return Err(format!("missing required parameter `{}`", p.name));
            }
            Some(v) if !v.is_null() && !p.kind.accepts(v) => {
                return Err(format!("parameter `{}` must be {}", p.name, p.kind.label()));
            }
            _ => {}
        }
    }
    Ok(map)
}

/// Run one tool call. Never panics on model input and never returns an
/// error: every failure is an `ok=false` result.
pub fn dispatch(call: &ToolCall, ctx: &mut ToolContext<'_>) -> Dispatched {
    let mut control = Control::Continue;
    let outcome = match ctx.registry.iter().find(|s| s.name == call.tool_name) {
        None => {
            let names: Vec<&str> = ctx.registry.iter().map(|s| s.name.as_str()).collect();
            Err(format!("unknown tool `{}`; available tools: {}", call.tool_name, names.join(", ")))
        }
        Some(spec) => check_args(spec, call).and_then(|map| {
            let args = Args { map };
            let name: ToolName = call.tool_name.parse().expect("registry holds known tools");
            run_tool(name, &args, ctx, &mut control)
        }),
    };
    let (ok, content) = match outcome {
        Ok(text) => (true, text),
        Err(text) => (false, text),
    };
    let (content, truncated) = truncate_middle(&content, ctx.settings.output_cap, ctx.settings.output_head);
    Dispatched { result: ToolResult { call_id: call.call_id.clone(), ok, content, truncated }, control }
}

fn run_tool(name: ToolName, args: &Args<'_>, ctx: &mut ToolContext<'_>, control: &mut Control) -> Result<String, String> {
    match name {
        ToolName::Editor => run_editor(args, ctx),
        ToolName::Terminal => {
            let cmd = args.text("command").unwrap_or_default();
            if cmd.trim().is_empty() {
                return Err("parameter `command` is empty".into());
            }
            let secs = match args.int("timeout") {
                Some(t) if t < 1 => return Err("parameter `timeout` must be at least 1".into()),
                Some(t) => t as u64,
                None => ctx.settings.terminal_timeout_secs,
            };
            run_command(ctx.workspace.root(), cmd, Duration::from_secs(secs))
                .map(|r| r.render())
                .map_err(|e| format!("could not start the command: {e}"))
        }
        ToolName::Search => {
            let pattern = args.text("pattern").unwrap_or_default();
            search::search(
                ctx.workspace,
                pattern,
                args.text("dir"),
                ctx.settings.search_cap,
                ctx.settings.search_max_file_bytes,
            )
            .map(|list| list.render())
            .map_err(|e| e.to_string())
        }
        ToolName::Think | ToolName::Plan => {
            let key = if name == ToolName::Think { "thought" } else { "plan" };
            if args.text(key).unwrap_or_default().trim().is_empty() {
                return Err(format!("parameter `{key}` is empty"));
            }
            Ok(if name == ToolName::Think { THINK_ACK } else { PLAN_ACK }.to_string())
        }
        ToolName::Finish => {
            *control = Control::Finish;
            Ok(FINISH_ACK.to_string())
        }
        ToolName::Summary => {
            let first = args.int("first_turn").unwrap_or(-1);
            let last = args.int("last_turn").unwrap_or(-1);
            if first < 0 || last < 0 {
                return Err("turn numbers must be non-negative".into());
            }
            let text = args.text("summary").unwrap_or_default();
            ctx.memory
                .summarize(first as usize, last as usize, text)
                .map(|()| format!("Turns {first}-{last} replaced by the summary."))
                .map_err(|e| e.to_string())
        }
    }
}

fn run_editor(args: &Args<'_>, ctx: &mut ToolContext<'_>) -> Result<String, String> {
    let command = args.text("command").unwrap_or_default();
    let path = args.text("path").unwrap_or_default();
    let modify_command = match ctx.edit_format {
        EditFormat::StringReplace => "str_replace",
        EditFormat::DiffBlock => "diff",
    };
    match command {
        "view" => editor::view(ctx.workspace, path, (args.int("start_line"), args.int("end_line")))
            .map_err(|e| e.to_string()),
        "create" => {
            let text = args.need_text("file_text", "create")?;
            editor::create(ctx.workspace, path, text, args.bool("overwrite").unwrap_or(false))
                .map_err(|e| e.to_string())
        }
        c if c == modify_command => {
            let op = match ctx.edit_format {
                EditFormat::StringReplace => EditOperation::StringReplace {
                    old: args.need_text("old_str", c)?.to_string(),
                    new: args.need_text("new_str", c)?.to_string(),
                },
                EditFormat::DiffBlock => EditOperation::DiffBlock { raw: args.need_text("diff", c)?.to_string() },
            };
            let attempt = editor::modify(ctx.workspace, path, &op).map_err(|e| e.to_string())?;
            ctx.ledger.record(attempt.result.is_ok(), attempt.fallback);
            attempt.result.map_err(|e| e.to_string())
        }
        other => Err(format!("unknown editor command `{other}`; use one of: view, create, {modify_command}")),
    }
}
