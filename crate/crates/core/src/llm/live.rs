use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use serde_json::Value;
use ureq::Agent;

use super::{wire, ChatBackend, ChatRequest, ChatResponse, LlmError};

pub const ENV_BASE_URL: &str = "LITA_BASE_URL";
pub const ENV_API_KEY: &str = "LITA_API_KEY";
pub const ENV_MODEL: &str = "LITA_MODEL";

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Endpoint prefix; `/chat/completions` is appended.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model_id: String,
    pub max_retries: u32,
    /// First backoff delay; doubled on every retry.
    pub backoff: Duration,
    pub request_timeout: Duration,
}

impl LiveConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model_id: model_id.into(),
            max_retries: 3,
            backoff: Duration::from_secs(1),
            request_timeout: Duration::from_secs(600),
        }
    }

    /// Read the endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self, LlmError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        let base = var(ENV_BASE_URL).ok_or_else(|| LlmError::Config(format!("{ENV_BASE_URL} is not set")))?;
        let model = var(ENV_MODEL).ok_or_else(|| LlmError::Config(format!("{ENV_MODEL} is not set")))?;
        let mut config = Self::new(base, model);
        config.api_key = var(ENV_API_KEY);
        Ok(config)
    }
}

/// Client for the HTTP chat-completion protocol.
pub struct LiveBackend {
    config: LiveConfig,
    agent: Agent,
    next_id: AtomicU64,
}

const OVERFLOW_HINTS: [&str; 4] = ["context_length", "context length", "context window", "maximum context"];

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.request_timeout))
            .build()
            .into();
        Self { config, agent, next_id: AtomicU64::new(0) }
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &Value) -> Result<ChatResponse, LlmError> {
        let mut request = self.agent.post(&self.url()).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| LlmError::Transport { status: None, message: e.to_string() })?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport { status: Some(status), message: e.to_string() })?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth { status, message: text }),
            429 | 500..=599 => return Err(LlmError::Transport { status: Some(status), message: text }),
            _ => {
                let lower = text.to_ascii_lowercase();
                if OVERFLOW_HINTS.iter().any(|h| lower.contains(h)) {
                    return Err(LlmError::ContextOverflow(text));
                }
                return Err(LlmError::Malformed(format!("HTTP {status}: {text}")));
            }
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| LlmError::Malformed(e.to_string()))?;
        let mut fresh = |_| format!("call_{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        wire::parse_response(&value, &mut fresh)
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        req.validate()?;
        let body = wire::request_body(req);
        let mut delay = self.config.backoff;
        let mut retries = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if e.is_retryable() && retries < self.config.max_retries => {
                    retries += 1;
                    tracing::warn!(retry = retries, error = %e, "chat request failed; retrying");
                    thread::sleep(delay);
                    delay *= 2;
                }
                other => return other,
            }
        }
    }
}
