//! Lite coding-agent framework and evaluation harness.
//!
//! The crate is organised around a small, fixed tool set driven by an
//! autonomous tool-calling loop:
//!
//! - [`task`], [`message`], [`transcript`], [`config`], [`tool_spec`]: shared
//!   domain types and their on-disk formats.
//! - [`llm`]: chat-completion backends (HTTP and scripted replay).
//! - [`toolkit`]: the tool registry, workspace sandbox and tool implementations.
//! - [`edits`]: string-replace and search/replace-block edit engines.
//! - [`memory`]: linear and summarized conversation context.
//! - [`agent`]: the render → complete → dispatch loop.
//! - [`bench`]: task prompts, workspaces, validation and importers.
//! - [`eval`]: orchestration and metrics (checkpoints, tokens, cost,
//!   tool histograms, intrinsic complexity, relative gap).

pub mod agent;
pub mod bench;
pub mod config;
pub mod edits;
pub mod eval;
pub mod llm;
pub mod memory;
pub mod message;
pub mod task;
pub mod tool_spec;
pub mod toolkit;
pub mod transcript;

pub use config::{AgentConfig, MemoryStrategy, Variant};
pub use message::{Message, Role, ToolArguments, ToolCall, ToolResult, Usage};
pub use task::{load_manifest, Manifest, SeedFile, TaskInstance};
pub use tool_spec::{ParamKind, ParamSpec, ToolName, ToolSpec};
pub use transcript::{Outcome, Transcript, Turn};
