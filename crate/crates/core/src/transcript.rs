//! Run transcripts and their line-delimited on-disk form.
//!
//! A transcript file holds one JSON record per line: a `header`, one `turn`
//! record per assistant response, and a closing `footer`. Turns are written
//! as they complete, so a crashed run still leaves every finished turn on
//! disk.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edits::EditLedger;
use crate::message::{Message, ToolResult, Usage};

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Finished,
    MaxTurns,
    BackendError,
    ContextOverflow,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Finished => "finished",
            Outcome::MaxTurns => "max_turns",
            Outcome::BackendError => "backend_error",
            Outcome::ContextOverflow => "context_overflow",
        }
    }
}

/// One assistant response and everything the harness did in reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// 0-based turn index.
    pub index: usize,
    pub assistant: Message,
    #[serde(default)]
    pub results: Vec<ToolResult>,
    #[serde(default)]
    pub usage: Usage,
    /// A nudge user message followed this turn (no tool call was made).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub nudged: bool,
    /// Ids of calls not executed because an earlier call in the turn finished the run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub task_id: String,
    pub agent_variant: String,
    pub turns: Vec<Turn>,
    pub outcome: Outcome,
    pub wall_time_secs: f64,
    /// The run hit the wall-clock cap (outcome is `max_turns`).
    pub wall_clock_exceeded: bool,
    pub edit_ledger: EditLedger,
    /// Backend failure message for `backend_error` and `context_overflow` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header {
        version: u32,
        task_id: String,
        agent_variant: String,
    },
    Turn(Turn),
    Footer {
        outcome: Outcome,
        wall_time_secs: f64,
        wall_clock_exceeded: bool,
        edit_ledger: EditLedger,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("transcript line {line}: expected {expected} record")]
    Structure { line: usize, expected: &'static str },
    #[error("transcript ends without a footer record")]
    MissingFooter,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn write_record<W: Write>(out: &mut W, record: &Record) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Streams a transcript to `W` one record at a time.
pub struct TranscriptWriter<W: Write> {
    out: W,
}

impl<W: Write> TranscriptWriter<W> {
    pub fn start(mut out: W, task_id: &str, agent_variant: &str) -> io::Result<Self> {
        write_record(
            &mut out,
            &Record::Header {
                version: TRANSCRIPT_VERSION,
                task_id: task_id.to_string(),
                agent_variant: agent_variant.to_string(),
            },
        )?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write_turn(&mut self, turn: &Turn) -> io::Result<()> {
        write_record(&mut self.out, &Record::Turn(turn.clone()))?;
        self.out.flush()
    }

    pub fn finish(mut self, t: &Transcript) -> io::Result<W> {
        write_record(
            &mut self.out,
            &Record::Footer {
                outcome: t.outcome,
                wall_time_secs: t.wall_time_secs,
                wall_clock_exceeded: t.wall_clock_exceeded,
                edit_ledger: t.edit_ledger,
                error: t.error.clone(),
            },
        )?;
        self.out.flush()?;
        Ok(self.out)
    }
}

impl Transcript {
    pub fn new(task_id: impl Into<String>, agent_variant: impl Into<String>) -> Self {
        Self {
            task_id: task_id.into(),
            agent_variant: agent_variant.into(),
            turns: Vec::new(),
            outcome: Outcome::MaxTurns,
            wall_time_secs: 0.0,
            wall_clock_exceeded: false,
            edit_ledger: EditLedger::default(),
            error: None,
        }
    }

    pub fn usage(&self) -> Usage {
        self.turns.iter().map(|t| t.usage).sum()
    }

    /// Tool calls that were dispatched (skipped calls excluded), in order.
    pub fn dispatched_calls(&self) -> impl Iterator<Item = (&Turn, &crate::message::ToolCall)> {
        self.turns.iter().flat_map(|turn| {
            turn.assistant
                .calls()
                .iter()
                .filter(move |c| !turn.skipped.contains(&c.call_id))
                .map(move |c| (turn, c))
        })
    }

    /// Line-delimited serialization. Deterministic for a given value.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut w = TranscriptWriter::start(Vec::new(), &self.task_id, &self.agent_variant)
            .expect("writing to memory");
        for turn in &self.turns {
            w.write_turn(turn).expect("writing to memory");
        }
        w.finish(self).expect("writing to memory")
    }

    pub fn from_jsonl(bytes: &[u8]) -> Result<Self, TranscriptError> {
        Self::read(bytes)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, TranscriptError> {
        let mut transcript: Option<Transcript> = None;
        let mut closed = false;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line)
                .map_err(|e| TranscriptError::Parse { line: line_no, message: e.to_string() })?;
            if closed {
                return Err(TranscriptError::Structure { line: line_no, expected: "no further" });
            }
            match (record, transcript.as_mut()) {
                (Record::Header { task_id, agent_variant, .. }, None) => {
                    transcript = Some(Transcript::new(task_id, agent_variant));
                }
                (Record::Turn(turn), Some(t)) => t.turns.push(turn),
                (Record::Footer { outcome, wall_time_secs, wall_clock_exceeded, edit_ledger, error }, Some(t)) => {
                    t.error = error;
                    t.outcome = outcome;
                    t.wall_time_secs = wall_time_secs;
                    t.wall_clock_exceeded = wall_clock_exceeded;
                    t.edit_ledger = edit_ledger;
                    closed = true;
                }
                (_, None) => return Err(TranscriptError::Structure { line: line_no, expected: "header" }),
                (Record::Header { .. }, Some(_)) => {
                    return Err(TranscriptError::Structure { line: line_no, expected: "turn or footer" })
                }
            }
        }
        match transcript {
            Some(t) if closed => Ok(t),
            _ => Err(TranscriptError::MissingFooter),
        }
    }

    /// SHA-256 over the serialization with timing zeroed. Two replays of the
    /// same script produce the same digest.
    pub fn replay_digest(&self) -> String {
        let mut timeless = self.clone();
        timeless.wall_time_secs = 0.0;
        hex::encode(Sha256::digest(timeless.to_jsonl()))
    }
}
