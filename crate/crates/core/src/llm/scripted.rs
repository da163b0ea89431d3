use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{ChatBackend, ChatRequest, ChatResponse, FinishReason, LlmError};
use crate::message::{Message, Role, Usage};

/// Replays a fixed list of responses in order. Exhaustion is an error; the
/// last response is never repeated.
#[derive(Debug)]
pub struct ScriptedBackend {
    script: Vec<ChatResponse>,
    cursor: Mutex<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

impl ScriptError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ScriptError::Io { .. } => None,
            ScriptError::Parse { line, .. } | ScriptError::Invalid { line, .. } => Some(*line),
        }
    }
}

#[derive(Deserialize)]
struct RawResponse {
    #[serde(alias = "assistant")]
    message: Message,
    #[serde(default)]
    usage: Usage,
    #[serde(default)]
    finish_reason: Option<FinishReason>,
}

/// Parse a script: one response per line, blank lines ignored. A missing
/// `finish_reason` is derived from the message.
pub fn parse_script(text: &str) -> Result<Vec<ChatResponse>, ScriptError> {
    let mut script = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawResponse = serde_json::from_str(line)
            .map_err(|e| ScriptError::Parse { line: line_no, column: e.column(), message: e.to_string() })?;
        let invalid = |message: String| ScriptError::Invalid { line: line_no, message };
        if raw.message.role != Role::Assistant {
            return Err(invalid(format!("expected an assistant message, got role {}", raw.message.role)));
        }
        let mut response = ChatResponse::new(raw.message, raw.usage);
        if let Some(reason) = raw.finish_reason {
            response.finish_reason = reason;
            let calls = !response.message.calls().is_empty();
            if calls && reason != FinishReason::ToolCalls || !calls && reason == FinishReason::ToolCalls {
                return Err(invalid("finish_reason tool_calls must match the presence of tool calls".into()));
            }
        }
        for call in response.message.calls() {
            if !ids.insert(call.call_id.clone()) {
                return Err(invalid(format!("duplicate call id `{}`", call.call_id)));
            }
        }
        script.push(response);
    }
    Ok(script)
}

pub fn load_script(path: &Path) -> Result<ScriptedBackend, ScriptError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
    Ok(ScriptedBackend::new(parse_script(&text)?))
}

impl ScriptedBackend {
    pub fn new(script: Vec<ChatResponse>) -> Self {
        Self { script, cursor: Mutex::new(0) }
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }

    pub fn cursor(&self) -> usize {
        *self.cursor.lock().expect("cursor lock")
    }

    pub fn script(&self) -> &[ChatResponse] {
        &self.script
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        req.validate()?;
        let mut cursor = self.cursor.lock().expect("cursor lock");
        let response = self.script.get(*cursor).cloned().ok_or(LlmError::ScriptExhausted { len: self.script.len() })?;
        *cursor += 1;
        tracing::debug!(turn = *cursor, messages = req.messages.len(), "scripted response");
        Ok(response)
    }
}
