//! Search/replace diff blocks.
//!
//! Grammar (lines are separated by `\n`; a marker line may carry trailing
//! whitespace, including `\r`, but nothing before the marker):
//!
//! ```text
//! document    = *( other-line / block )
//! block       = open-line search-line* divider-line replace-line* close-line
//! open-line   = "<<<<<<< SEARCH"
//! divider-line= "======="
//! close-line  = ">>>>>>> REPLACE"
//! other-line  = any line that is not a marker line
//! ```
//!
//! A block needs at least one search line. Lines outside blocks (prose,
//! code fences, file names) are ignored. A divider or close marker outside a
//! block, an open marker inside one, a close before the divider and a second
//! divider are all `MisorderedMarkers` errors.

use std::fmt;

use super::replace::occurrences;
use super::{EditError, Splice};

pub const OPEN_MARKER: &str = "<<<<<<< SEARCH";
pub const DIVIDER_MARKER: &str = "=======";
pub const CLOSE_MARKER: &str = ">>>>>>> REPLACE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffBlock {
    pub search_lines: Vec<String>,
    pub replace_lines: Vec<String>,
}

impl DiffBlock {
    pub fn new(search: &str, replace: &str) -> Self {
        Self {
            search_lines: search.split('\n').map(str::to_string).collect(),
            replace_lines: if replace.is_empty() {
                Vec::new()
            } else {
                replace.split('\n').map(str::to_string).collect()
            },
        }
    }

    pub fn search_text(&self) -> String {
        self.search_lines.join("\n")
    }

    pub fn replace_text(&self) -> String {
        self.replace_lines.join("\n")
    }
}

impl fmt::Display for DiffBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{OPEN_MARKER}")?;
        for line in &self.search_lines {
            writeln!(f, "{line}")?;
        }
        writeln!(f, "{DIVIDER_MARKER}")?;
        for line in &self.replace_lines {
            writeln!(f, "{line}")?;
        }
        writeln!(f, "{CLOSE_MARKER}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffParseError {
    #[error("line {line}: block opened here is never closed")]
    UnterminatedBlock { line: usize },
    #[error("line {line}: unexpected `{marker}` marker")]
    MisorderedMarkers { line: usize, marker: &'static str },
    #[error("line {line}: block has no search lines")]
    EmptySearch { line: usize },
}

impl DiffParseError {
    pub fn line(&self) -> usize {
        match self {
            DiffParseError::UnterminatedBlock { line }
            | DiffParseError::MisorderedMarkers { line, .. }
            | DiffParseError::EmptySearch { line } => *line,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Marker {
    Open,
    Divider,
    Close,
}

fn marker(line: &str) -> Option<Marker> {
    match line.trim_end() {
        OPEN_MARKER => Some(Marker::Open),
        DIVIDER_MARKER => Some(Marker::Divider),
        CLOSE_MARKER => Some(Marker::Close),
        _ => None,
    }
}

fn marker_text(m: Marker) -> &'static str {
    match m {
        Marker::Open => OPEN_MARKER,
        Marker::Divider => DIVIDER_MARKER,
        Marker::Close => CLOSE_MARKER,
    }
}

enum State {
    Outside,
    Search { open_line: usize, search: Vec<String> },
    Replace { open_line: usize, search: Vec<String>, replace: Vec<String> },
}

/// Extract the blocks of `text` in document order.
pub fn parse_diff_blocks(text: &str) -> Result<Vec<DiffBlock>, DiffParseError> {
    let mut blocks = Vec::new();
    let mut state = State::Outside;
    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let m = marker(line);
        let misordered = |m: Marker| DiffParseError::MisorderedMarkers { line: line_no, marker: marker_text(m) };
        state = match (state, m) {
            (State::Outside, Some(Marker::Open)) => State::Search { open_line: line_no, search: Vec::new() },
            (State::Outside, Some(other)) => return Err(misordered(other)),
            (State::Outside, None) => State::Outside,
            (State::Search { open_line, search }, Some(Marker::Divider)) => {
                State::Replace { open_line, search, replace: Vec::new() }
            }
            (State::Search { .. }, Some(other)) => return Err(misordered(other)),
            (State::Search { open_line, mut search }, None) => {
                search.push(line.to_string());
                State::Search { open_line, search }
            }
            (State::Replace { open_line, search, replace }, Some(Marker::Close)) => {
                if search.is_empty() {
                    return Err(DiffParseError::EmptySearch { line: open_line });
                }
                blocks.push(DiffBlock { search_lines: search, replace_lines: replace });
                State::Outside
            }
            (State::Replace { .. }, Some(other)) => return Err(misordered(other)),
            (State::Replace { open_line, search, mut replace }, None) => {
                replace.push(line.to_string());
                State::Replace { open_line, search, replace }
            }
        };
    }
    match state {
        State::Outside => Ok(blocks),
        State::Search { open_line, .. } | State::Replace { open_line, .. } => {
            Err(DiffParseError::UnterminatedBlock { line: open_line })
        }
    }
}

/// Byte spans `(start, end_without_terminator, end_with_terminator)` of
/// every line in `content`.
fn line_spans(content: &str) -> Vec<(usize, usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for piece in content.split_inclusive('\n') {
        let end = start + piece.len();
        let body_end = if piece.ends_with("\r\n") {
            end - 2
        } else if piece.ends_with('\n') {
            end - 1
        } else {
            end
        };
        spans.push((start, body_end, end));
        start = end;
    }
    spans
}

/// Apply one block: exact unique match first, then a single pass that
/// matches whole lines ignoring trailing whitespace.
pub fn apply_diff_block(content: &str, block: &DiffBlock) -> Result<Splice, EditError> {
    let search = block.search_text();
    if search.is_empty() {
        return Err(EditError::EmptySearch);
    }
    let replace = block.replace_text();
    match occurrences(content, &search).as_slice() {
        [start] => return Ok(Splice::new(content, *start, search.len(), &replace, false)),
        [] => {}
        many => return Err(EditError::Ambiguous(many.len())),
    }

    let spans = line_spans(content);
    let wanted: Vec<&str> = block.search_lines.iter().map(|l| l.trim_end()).collect();
    let k = wanted.len();
    if k > spans.len() {
        return Err(EditError::NotFound);
    }
    let hits: Vec<usize> = (0..=spans.len() - k)
        .filter(|&i| {
            (0..k).all(|j| {
                let (s, e, _) = spans[i + j];
                content[s..e].trim_end() == wanted[j]
            })
        })
        .collect();
    match hits.as_slice() {
        [] => Err(EditError::NotFound),
        [i] => {
            let start = spans[*i].0;
            let (_, last_body_end, last_end) = spans[i + k - 1];
            let terminator = &content[last_body_end..last_end];
            let insert = if block.replace_lines.is_empty() {
                String::new()
            } else {
                format!("{replace}{terminator}")
            };
            Ok(Splice::new(content, start, last_end - start, &insert, true))
        }
        many => Err(EditError::FallbackAmbiguous(many.len())),
    }
}

/// Apply blocks in order. The reported region spans all changes.
pub fn apply_diff_blocks(content: &str, blocks: &[DiffBlock]) -> Result<Splice, EditError> {
    if blocks.is_empty() {
        return Err(EditError::NoBlocks);
    }
    let mut text = content.to_string();
    let mut region: Option<(usize, usize)> = None;
    let mut fallback = false;
    for (i, block) in blocks.iter().enumerate() {
        let splice = apply_diff_block(&text, block)
            .map_err(|e| EditError::Block { block: i + 1, source: Box::new(e) })?;
        let (s, removed, inserted) = (splice.start, splice.removed_len, splice.inserted_len);
        let delta = inserted as isize - removed as isize;
        // Map a position of the previous text into the new text.
        let map = |p: usize| {
            if p >= s + removed {
                (p as isize + delta) as usize
            } else if p <= s {
                p
            } else {
                s + inserted
            }
        };
        region = Some(match region {
            None => (s, s + inserted),
            Some((rs, re)) => (map(rs).min(s), map(re).max(s + inserted)),
        });
        fallback |= splice.fallback;
        text = splice.text;
    }
    let (start, end) = region.expect("at least one block");
    let removed_len = content.len() + (end - start) - text.len();
    Ok(Splice { text, start, removed_len, inserted_len: end - start, fallback })
}
