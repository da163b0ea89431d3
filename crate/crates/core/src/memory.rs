//! Conversation context: linear history, or history where the model may
//! replace ranges of past turns with its own summaries.
//!
//! Events are never removed. A summary only changes what [`Memory::render`]
//! sends to the model; the transcript keeps every original message.

use crate::config::MemoryStrategy;
use crate::message::{Message, Role};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRange {
    /// Inclusive event index range that the summary replaces.
    pub first_event: usize,
    pub last_event: usize,
    pub first_turn: usize,
    pub last_turn: usize,
    pub message: Message,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemoryError {
    #[error("summaries are only available with the summarized memory strategy")]
    WrongStrategy,
    #[error("turn range {first}..={last} is invalid; summarize completed turns 0..={max}")]
    OutOfRange { first: usize, last: usize, max: isize },
    #[error("turn range {first}..={last} overlaps an existing summary of turns {other_first}..={other_last}")]
    Overlap { first: usize, last: usize, other_first: usize, other_last: usize },
    #[error("turn range {first}..={last} holds fewer than two messages; nothing to condense")]
    TooSmall { first: usize, last: usize },
    #[error("summary text is empty")]
    EmptySummary,
}

#[derive(Debug, Clone)]
pub struct Memory {
    strategy: MemoryStrategy,
    system: Message,
    initial: Message,
    events: Vec<Message>,
    event_turns: Vec<usize>,
    summaries: Vec<SummaryRange>,
    current_turn: usize,
}

impl Memory {
    pub fn new(strategy: MemoryStrategy, system_prompt: impl Into<String>, initial_prompt: impl Into<String>) -> Self {
        Self {
            strategy,
            system: Message::system(system_prompt),
            initial: Message::user(initial_prompt),
            events: Vec::new(),
            event_turns: Vec::new(),
            summaries: Vec::new(),
            current_turn: 0,
        }
    }

    pub fn strategy(&self) -> MemoryStrategy {
        self.strategy
    }

    pub fn events(&self) -> &[Message] {
        &self.events
    }

    pub fn summaries(&self) -> &[SummaryRange] {
        &self.summaries
    }

    pub fn current_turn(&self) -> usize {
        self.current_turn
    }

    /// Messages appended from now on belong to `turn`.
    pub fn set_turn(&mut self, turn: usize) {
        self.current_turn = turn;
    }

    pub fn append(&mut self, msg: Message) {
        self.events.push(msg);
        self.event_turns.push(self.current_turn);
    }

    /// The context for the next request: system prompt, initial user prompt,
    /// then events with each summarized range collapsed to its summary.
    pub fn render(&self) -> Vec<Message> {
        let mut out = Vec::with_capacity(self.events.len() + 2);
        out.push(self.system.clone());
        out.push(self.initial.clone());
        let mut ranges: Vec<&SummaryRange> = self.summaries.iter().collect();
        ranges.sort_by_key(|r| r.first_event);
        let mut ranges = ranges.into_iter().peekable();
        let mut i = 0;
        while i < self.events.len() {
            match ranges.peek() {
                Some(r) if r.first_event == i => {
                    out.push(r.message.clone());
                    i = r.last_event + 1;
                    ranges.next();
                }
                _ => {
                    out.push(self.events[i].clone());
                    i += 1;
                }
            }
        }
        out
    }

    /// Replace events `first..=last` (event indices) with a summary message.
    pub fn summarize_events(&mut self, first: usize, last: usize, text: &str) -> Result<(), MemoryError> {
        if self.strategy != MemoryStrategy::Summarized {
            return Err(MemoryError::WrongStrategy);
        }
        if text.trim().is_empty() {
            return Err(MemoryError::EmptySummary);
        }
        if first > last || last >= self.events.len() {
            return Err(MemoryError::OutOfRange { first, last, max: self.events.len() as isize - 1 });
        }
        let (first_turn, last_turn) = (self.event_turns[first], self.event_turns[last]);
        self.insert_summary(first, last, first_turn, last_turn, text)
    }

    /// Replace every event of turns `first_turn..=last_turn` with a summary.
    /// Only completed turns (before the current one) can be summarized.
    pub fn summarize(&mut self, first_turn: usize, last_turn: usize, text: &str) -> Result<(), MemoryError> {
        if self.strategy != MemoryStrategy::Summarized {
            return Err(MemoryError::WrongStrategy);
        }
        if text.trim().is_empty() {
            return Err(MemoryError::EmptySummary);
        }
        let out_of_range =
            MemoryError::OutOfRange { first: first_turn, last: last_turn, max: self.current_turn as isize - 1 };
        if first_turn > last_turn || last_turn >= self.current_turn {
            return Err(out_of_range);
        }
        let first = self.event_turns.iter().position(|&t| t >= first_turn);
        let last = self.event_turns.iter().rposition(|&t| t <= last_turn);
        match (first, last) {
            (Some(first), Some(last)) if first <= last => {
                self.insert_summary(first, last, first_turn, last_turn, text)
            }
            _ => Err(MemoryError::TooSmall { first: first_turn, last: last_turn }),
        }
    }

    fn insert_summary(
        &mut self,
        first: usize,
        last: usize,
        first_turn: usize,
        last_turn: usize,
        text: &str,
    ) -> Result<(), MemoryError> {
        if let Some(other) = self.summaries.iter().find(|r| first <= r.last_event && r.first_event <= last) {
            return Err(MemoryError::Overlap {
                first: first_turn,
                last: last_turn,
                other_first: other.first_turn,
                other_last: other.last_turn,
            });
        }
        if last - first + 1 < 2 {
            return Err(MemoryError::TooSmall { first: first_turn, last: last_turn });
        }
        let message = Message {
            role: Role::User,
            content: format!("[Summary of turns {first_turn}-{last_turn}]\n{text}"),
            tool_calls: None,
            tool_call_id: None,
        };
        self.summaries.push(SummaryRange { first_event: first, last_event: last, first_turn, last_turn, message });
        Ok(())
    }
}
