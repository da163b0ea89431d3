use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::agent::AgentError;
use crate::bench::render_prompt;
use crate::config::AgentConfig;
use crate::llm::{ChatBackend, ChatRequest};
use crate::message::Message;
use crate::task::TaskInstance;
use crate::tool_spec::tools_wire_json;
use crate::toolkit::registry_for;

#[derive(Debug, thiserror::Error)]
pub enum CounterError {
    #[error("token counter command failed: {0}")]
    External(String),
    #[error("token counter backend: {0}")]
    Backend(#[from] crate::llm::LlmError),
}

/// A deterministic text to token-count function.
pub trait TokenCounter {
    fn id(&self) -> String;
    fn count(&self, text: &str) -> Result<u64, CounterError>;
}

/// `ceil(bytes / 4)` of the UTF-8 text.
pub struct Bytes4;

impl TokenCounter for Bytes4 {
    fn id(&self) -> String {
        "bytes4".into()
    }

    fn count(&self, text: &str) -> Result<u64, CounterError> {
        Ok((text.len() as u64).div_ceil(4))
    }
}

/// Runs a shell command with the text on stdin; the command prints the count.
pub struct ExternalCounter {
    pub command: String,
}

impl TokenCounter for ExternalCounter {
    fn id(&self) -> String {
        format!("external:{}", self.command)
    }

    fn count(&self, text: &str) -> Result<u64, CounterError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| CounterError::External(e.to_string()))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = text.to_string();
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let out = child.wait_with_output().map_err(|e| CounterError::External(e.to_string()))?;
        let _ = writer.join();
        if !out.status.success() {
            return Err(CounterError::External(format!("{}: {}", out.status, String::from_utf8_lossy(&out.stderr).trim())));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        stdout
            .trim()
            .parse()
            .map_err(|_| CounterError::External(format!("expected an integer, got `{}`", stdout.trim())))
    }
}

/// Asks a provider: the text is sent as the only message and the reported
/// input tokens are the count. Includes the provider's per-message framing.
pub struct UsageCounter<'a> {
    pub backend: &'a dyn ChatBackend,
    pub model_id: String,
}

impl TokenCounter for UsageCounter<'_> {
    fn id(&self) -> String {
        format!("usage:{}", self.model_id)
    }

    fn count(&self, text: &str) -> Result<u64, CounterError> {
        let req = ChatRequest {
            messages: vec![Message::system(text)],
            tools: vec![],
            temperature: 0.0,
            top_p: 1.0,
            model_id: self.model_id.clone(),
        };
        Ok(self.backend.complete(&req)?.usage.input_tokens)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreloadBreakdown {
    pub system_prompt: u64,
    pub initial_prompt: u64,
    pub tool_schema: u64,
}

impl PreloadBreakdown {
    pub fn total(&self) -> u64 {
        self.system_prompt + self.initial_prompt + self.tool_schema
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub variant: String,
    pub memory_strategy: String,
    pub task_id: String,
    pub tools: Vec<String>,
    pub action_count: usize,
    pub preloaded_tokens: u64,
    pub breakdown: PreloadBreakdown,
    pub token_counter_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ComplexityError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Counter(#[from] CounterError),
}

/// Action count and preloaded tokens of `config` on `task`. Tool schemas
/// are counted in their compact wire serialization.
pub fn complexity(
    config: &AgentConfig,
    task: &TaskInstance,
    counter: &dyn TokenCounter,
) -> Result<ComplexityReport, ComplexityError> {
    let registry = registry_for(config).map_err(AgentError::from)?;
    let breakdown = PreloadBreakdown {
        system_prompt: counter.count(&config.system_prompt)?,
        initial_prompt: counter.count(&render_prompt(task))?,
        tool_schema: counter.count(&tools_wire_json(&registry))?,
    };
    Ok(ComplexityReport {
        variant: config.variant.as_str().into(),
        memory_strategy: match config.memory_strategy {
            crate::config::MemoryStrategy::Linear => "linear".into(),
            crate::config::MemoryStrategy::Summarized => "summarized".into(),
        },
        task_id: task.id.clone(),
        tools: registry.iter().map(|s| s.name.clone()).collect(),
        action_count: registry.len(),
        preloaded_tokens: breakdown.total(),
        breakdown,
        token_counter_id: counter.id(),
    })
}
