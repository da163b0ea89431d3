//! Agent configuration and the four variant presets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Shipped default system prompt.
pub const DEFAULT_SYSTEM_PROMPT: &str = include_str!("../assets/prompts/system.md");

/// Turn budget for exercise-style runs.
pub const EXERCISE_MAX_TURNS: usize = 50;
/// Turn budget for repository bug-fix runs.
pub const BUGFIX_MAX_TURNS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Lita,
    LitaDiff,
    LitaMini,
    LitaReason,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Lita, Variant::LitaDiff, Variant::LitaMini, Variant::LitaReason];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Lita => "lita",
            Variant::LitaDiff => "lita_diff",
            Variant::LitaMini => "lita_mini",
            Variant::LitaReason => "lita_reason",
        }
    }

    pub fn edit_format(self) -> EditFormat {
        match self {
            Variant::LitaDiff => EditFormat::DiffBlock,
            _ => EditFormat::StringReplace,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_").to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| format!("unknown variant `{s}` (expected lita, lita_diff, lita_mini or lita_reason)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryStrategy {
    #[default]
    Linear,
    Summarized,
}

impl FromStr for MemoryStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(MemoryStrategy::Linear),
            "summarized" => Ok(MemoryStrategy::Summarized),
            other => Err(format!("unknown memory strategy `{other}` (expected linear or summarized)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditFormat {
    StringReplace,
    DiffBlock,
}

/// Limits applied by the tool implementations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolSettings {
    pub terminal_timeout_secs: u64,
    /// Maximum characters in any tool result.
    pub output_cap: usize,
    /// Characters kept from the start of truncated output; the rest of the
    /// cap goes to the tail.
    pub output_head: usize,
    pub search_cap: usize,
    pub search_max_file_bytes: u64,
}

impl Default for ToolSettings {
    fn default() -> Self {
        Self {
            terminal_timeout_secs: 120,
            output_cap: 16_000,
            output_head: 10_000,
            search_cap: 100,
            search_max_file_bytes: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub variant: Variant,
    /// Explicit tool set; `None` uses the variant's canonical set.
    pub enabled_tools: Option<Vec<String>>,
    pub memory_strategy: MemoryStrategy,
    pub max_turns: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub system_prompt: String,
    pub model_id: String,
    pub wall_clock_cap_secs: u64,
    pub tools: ToolSettings,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::preset(Variant::Lita)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("max_turns must be at least 1")]
    ZeroTurns,
    #[error("temperature must be >= 0, got {0}")]
    Temperature(f64),
    #[error("top_p must be in (0, 1], got {0}")]
    TopP(f64),
    #[error("system prompt is empty")]
    EmptySystemPrompt,
    #[error("output cap {cap} must exceed the head size {head}")]
    OutputCap { cap: usize, head: usize },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: String, source: toml::de::Error },
}

impl AgentConfig {
    pub fn preset(variant: Variant) -> Self {
        Self {
            variant,
            enabled_tools: None,
            memory_strategy: MemoryStrategy::Linear,
            max_turns: EXERCISE_MAX_TURNS,
            temperature: 0.0,
            top_p: 1.0,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            model_id: String::new(),
            wall_clock_cap_secs: 3600,
            tools: ToolSettings::default(),
        }
    }

    pub fn with_memory(mut self, strategy: MemoryStrategy) -> Self {
        self.memory_strategy = strategy;
        self
    }

    pub fn with_max_turns(mut self, max_turns: usize) -> Self {
        self.max_turns = max_turns;
        self
    }

    pub fn edit_format(&self) -> EditFormat {
        self.variant.edit_format()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_turns == 0 {
            return Err(ConfigError::ZeroTurns);
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ConfigError::Temperature(self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ConfigError::TopP(self.top_p));
        }
        if self.system_prompt.trim().is_empty() {
            return Err(ConfigError::EmptySystemPrompt);
        }
        if self.tools.output_cap <= self.tools.output_head {
            return Err(ConfigError::OutputCap { cap: self.tools.output_cap, head: self.tools.output_head });
        }
        Ok(())
    }

    /// Load a TOML config file. Unspecified fields keep their preset values.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let cfg: AgentConfig = toml::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.display().to_string(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }
}
