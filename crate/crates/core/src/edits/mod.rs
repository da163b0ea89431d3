//! File-edit engines: exact string replacement and search/replace diff
//! blocks, plus the attempt ledger behind the edit-adherence metric.
//!
//! Both engines require the searched text to occur exactly once. Occurrences
//! are counted at every start position, so overlapping matches count
//! separately (`"aa"` occurs twice in `"aaa"`). Content is edited
//! byte-exactly; line endings are never normalized.

mod diff_block;
mod ledger;
mod replace;

pub use diff_block::{apply_diff_block, apply_diff_blocks, parse_diff_blocks, DiffBlock, DiffParseError};
pub use ledger::{adherence, macro_adherence, micro_adherence, EditLedger};
pub use replace::{apply_string_replace, occurrences, replace_unique};

use serde::{Deserialize, Serialize};

/// The two edit formats and their payloads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum EditOperation {
    StringReplace { old: String, new: String },
    DiffBlock { raw: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("the text to replace is empty")]
    EmptySearch,
    #[error("search text not found")]
    NotFound,
    #[error("search text matched {0} locations; include more surrounding lines to make it unique")]
    Ambiguous(usize),
    #[error("search text not found exactly; ignoring trailing whitespace it matched {0} locations")]
    FallbackAmbiguous(usize),
    #[error("diff block {block}: {source}")]
    Block { block: usize, source: Box<EditError> },
    #[error(transparent)]
    Parse(#[from] DiffParseError),
    #[error("no diff blocks found")]
    NoBlocks,
}

/// A successful edit: the new content and where it changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splice {
    pub text: String,
    /// Byte offset where the replaced region starts (same in old and new).
    pub start: usize,
    /// Length of the region that was removed.
    pub removed_len: usize,
    /// Length of the region that was inserted.
    pub inserted_len: usize,
    /// The trailing-whitespace fallback was needed.
    pub fallback: bool,
}

impl Splice {
    fn new(content: &str, start: usize, removed_len: usize, insert: &str, fallback: bool) -> Self {
        let mut text = String::with_capacity(content.len() - removed_len + insert.len());
        text.push_str(&content[..start]);
        text.push_str(insert);
        text.push_str(&content[start + removed_len..]);
        Splice { text, start, removed_len, inserted_len: insert.len(), fallback }
    }
}

impl EditOperation {
    /// Apply to `content`. Diff payloads may carry several blocks; they are
    /// applied in order and the edit fails as a whole if any block fails.
    pub fn apply(&self, content: &str) -> Result<Splice, EditError> {
        match self {
            EditOperation::StringReplace { old, new } => replace_unique(content, old, new),
            EditOperation::DiffBlock { raw } => {
                let blocks = parse_diff_blocks(raw)?;
                apply_diff_blocks(content, &blocks)
            }
        }
    }
}
