//! Chat-completion backends: a live HTTP client and a scripted replay
//! backend for tests.

pub mod live;
pub mod scripted;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::message::{Message, Role, Usage};
use crate::tool_spec::ToolSpec;

pub use live::{LiveBackend, LiveConfig};
pub use scripted::{load_script, parse_script, ScriptError, ScriptedBackend};

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub tools: Vec<ToolSpec>,
    pub temperature: f64,
    pub top_p: f64,
    pub model_id: String,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        match self.messages.first() {
            None => Err(LlmError::InvalidRequest("no messages".into())),
            Some(m) if m.role != Role::System => {
                Err(LlmError::InvalidRequest("the first message must be the system prompt".into()))
            }
            Some(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    ToolCalls,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    #[serde(alias = "assistant")]
    pub message: Message,
    #[serde(default)]
    pub usage: Usage,
    pub finish_reason: FinishReason,
}

impl ChatResponse {
    /// A response whose finish reason follows from the message: `tool_calls`
    /// when it carries calls, `stop` otherwise.
    pub fn new(message: Message, usage: Usage) -> Self {
        let finish_reason = if message.calls().is_empty() { FinishReason::Stop } else { FinishReason::ToolCalls };
        let mut message = message;
        if message.tool_calls.as_ref().is_some_and(Vec::is_empty) {
            message.tool_calls = None;
        }
        Self { message, usage, finish_reason }
    }

    /// Whether `finish_reason = tool_calls` exactly when calls are present.
    pub fn is_consistent(&self) -> bool {
        (self.finish_reason == FinishReason::ToolCalls) == !self.message.calls().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("transport error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("authentication failed (HTTP {status}): {message}")]
    Auth { status: u16, message: String },
    #[error("malformed provider reply: {0}")]
    Malformed(String),
    #[error("context window exceeded: {0}")]
    ContextOverflow(String),
    #[error("script exhausted after {len} responses")]
    ScriptExhausted { len: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl LlmError {
    /// Transport failures, rate limits and server errors may be retried.
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transport { .. })
    }
}

/// A chat-completion provider. Implementations must be usable from several
/// agent loops at once; the scripted backend is the exception and is meant
/// for one run.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(req)
    }
}
