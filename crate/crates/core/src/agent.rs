//! The agent loop: render the context, ask the model, run its tool calls,
//! repeat until it calls `finish` or a budget runs out.
//!
//! A turn is one assistant response, however many tool calls it holds.

use std::time::{Duration, Instant};

use crate::config::AgentConfig;
use crate::edits::EditLedger;
use crate::llm::{ChatBackend, ChatRequest, FinishReason, LlmError};
use crate::memory::Memory;
use crate::message::{Message, ToolCall, ToolResult};
use crate::task::TaskInstance;
use crate::tool_spec::ToolSpec;
use crate::toolkit::{self, Control, ToolContext, ToolkitError, Workspace};
use crate::transcript::{Outcome, Transcript, Turn};

/// Sent when a response contains no tool call.
pub const NUDGE: &str = "continue with a tool call, or call finish";

/// Hooks called while a run progresses. Used by the harness to snapshot
/// the workspace after validation commands.
pub trait Observer {
    /// After each dispatched call. `turn` is the 0-based turn index.
    fn after_call(&mut self, _turn: usize, _call: &ToolCall, _result: &ToolResult, _ws: &Workspace) {}
    fn after_turn(&mut self, _turn: &Turn) {}
}

pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Finished,
    Overflow,
    BackendError,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Tools(#[from] ToolkitError),
}

/// The state of one run.
pub struct RunState<'a> {
    config: &'a AgentConfig,
    ws: &'a Workspace,
    memory: Memory,
    registry: Vec<ToolSpec>,
    ledger: EditLedger,
    transcript: Transcript,
}

impl<'a> RunState<'a> {
    pub fn new(task: &TaskInstance, config: &'a AgentConfig, ws: &'a Workspace, prompt: String) -> Result<Self, AgentError> {
        config.validate()?;
        let registry = toolkit::registry_for(config)?;
        Ok(Self {
            config,
            ws,
            memory: Memory::new(config.memory_strategy, config.system_prompt.clone(), prompt),
            registry,
            ledger: EditLedger::default(),
            transcript: Transcript::new(task.id.clone(), config.variant.as_str()),
        })
    }

    pub fn turn_index(&self) -> usize {
        self.transcript.turns.len()
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn registry(&self) -> &[ToolSpec] {
        &self.registry
    }

    /// One render, complete, dispatch cycle.
    pub fn step(&mut self, backend: &dyn ChatBackend, observer: &mut dyn Observer) -> StepOutcome {
        let index = self.turn_index();
        self.memory.set_turn(index);
        let request = ChatRequest {
            messages: self.memory.render(),
            tools: self.registry.clone(),
            temperature: self.config.temperature,
            top_p: self.config.top_p,
            model_id: self.config.model_id.clone(),
        };
        let response = match backend.complete(&request) {
            Ok(r) => r,
            Err(e) => {
                self.transcript.error = Some(e.to_string());
                return match e {
                    LlmError::ContextOverflow(_) => StepOutcome::Overflow,
                    _ => StepOutcome::BackendError,
                };
            }
        };
        self.memory.append(response.message.clone());
        let mut turn = Turn {
            index,
            assistant: response.message,
            results: Vec::new(),
            usage: response.usage,
            nudged: false,
            skipped: Vec::new(),
        };
        let outcome = match response.finish_reason {
            FinishReason::Length => {
                self.transcript.error = Some("response cut off at the output length limit".into());
                StepOutcome::Overflow
            }
            FinishReason::Error => {
                self.transcript.error = Some("the provider reported an error".into());
                StepOutcome::BackendError
            }
            _ if turn.assistant.calls().is_empty() => {
                turn.nudged = true;
                self.memory.append(Message::user(NUDGE));
                StepOutcome::Continue
            }
            _ => self.dispatch_all(&mut turn, observer),
        };
        observer.after_turn(&turn);
        self.transcript.turns.push(turn);
        outcome
    }

    fn dispatch_all(&mut self, turn: &mut Turn, observer: &mut dyn Observer) -> StepOutcome {
        let mut finished = false;
        for call in turn.assistant.calls() {
            if finished {
                turn.skipped.push(call.call_id.clone());
                continue;
            }
            let mut ctx = ToolContext {
                workspace: self.ws,
                memory: &mut self.memory,
                ledger: &mut self.ledger,
                settings: &self.config.tools,
                edit_format: self.config.edit_format(),
                registry: &self.registry,
            };
            let dispatched = toolkit::dispatch(call, &mut ctx);
            self.memory.append(Message::tool(&dispatched.result));
            observer.after_call(turn.index, call, &dispatched.result, self.ws);
            turn.results.push(dispatched.result);
            finished = dispatched.control == Control::Finish;
        }
        if finished {
            StepOutcome::Finished
        } else {
            StepOutcome::Continue
        }
    }

    pub fn into_transcript(mut self, outcome: Outcome) -> Transcript {
        self.transcript.outcome = outcome;
        self.transcript.edit_ledger = self.ledger;
        self.transcript
    }
}

/// Drive a task to completion in an already materialized workspace.
/// Runtime failures end up as the transcript outcome; only an invalid
/// configuration is an error.
pub fn run_task(
    task: &TaskInstance,
    config: &AgentConfig,
    backend: &dyn ChatBackend,
    ws: &Workspace,
    observer: &mut dyn Observer,
) -> Result<Transcript, AgentError> {
    let prompt = crate::bench::render_prompt(task);
    let mut state = RunState::new(task, config, ws, prompt)?;
    let started = Instant::now();
    let cap = Duration::from_secs(config.wall_clock_cap_secs);
    let mut wall_clock_exceeded = false;
    let outcome = loop {
        if state.turn_index() >= config.max_turns {
            break Outcome::MaxTurns;
        }
        if started.elapsed() >= cap {
            wall_clock_exceeded = true;
            break Outcome::MaxTurns;
        }
        match state.step(backend, observer) {
            StepOutcome::Continue => {}
            StepOutcome::Finished => break Outcome::Finished,
            StepOutcome::Overflow => break Outcome::ContextOverflow,
            StepOutcome::BackendError => break Outcome::BackendError,
        }
    };
    let mut transcript = state.into_transcript(outcome);
    transcript.wall_clock_exceeded = wall_clock_exceeded;
    transcript.wall_time_secs = started.elapsed().as_secs_f64();
    tracing::info!(task = %task.id, outcome = outcome.as_str(), turns = transcript.turns.len(), "run complete");
    Ok(transcript)
}
