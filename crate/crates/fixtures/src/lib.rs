//! Desk-scale fixtures: toy tasks in their source shapes, the manifest the
//! importers produce from them, scripted sessions with their expected
//! results, reference pricing, and a brute-force edit oracle.
//!
//! See `data/README.md` for the directory layout.

use std::path::{Path, PathBuf};

use serde::Deserialize;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn manifest_path() -> PathBuf {
    data_dir().join("manifest.json")
}

pub fn sources_dir() -> PathBuf {
    data_dir().join("sources")
}

/// Golden session scripts, named `<task id>.jsonl`.
pub fn scripts_dir() -> PathBuf {
    data_dir().join("scripts")
}

/// Scripts that are not golden sessions (sandbox probe, long runs).
pub fn extra_script(name: &str) -> PathBuf {
    data_dir().join("extra").join(name)
}

pub fn pricing_path() -> PathBuf {
    data_dir().join("pricing.toml")
}

pub fn golden_path() -> PathBuf {
    data_dir().join("golden.toml")
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ExpectedCheckpoint {
    pub pass_in_2_tests: bool,
    pub pass_in_budget: bool,
    pub agent_validations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct GoldenSession {
    pub task_id: String,
    pub variant: String,
    /// Script path relative to [`data_dir`].
    pub script: String,
    /// Expected replay digest of the transcript.
    pub digest: String,
    pub turns: usize,
    pub expected: ExpectedCheckpoint,
}

impl GoldenSession {
    pub fn script_path(&self) -> PathBuf {
        data_dir().join(&self.script)
    }
}

/// Preloaded tokens of a variant under the `bytes4` counter on one task.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PinnedComplexity {
    pub variant: String,
    pub memory: String,
    pub action_count: usize,
    pub preloaded_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Golden {
    pub sessions: Vec<GoldenSession>,
    /// Task the complexity values were computed on.
    pub complexity_task: String,
    pub complexity: Vec<PinnedComplexity>,
}

pub fn golden() -> Golden {
    let text = std::fs::read_to_string(golden_path()).expect("golden.toml is readable");
    toml::from_str(&text).expect("golden.toml parses")
}

/// Outcome of [`brute_force_splice_oracle`], mirroring the edit engines'
/// error variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    Spliced(String),
    EmptySearch,
    NotFound,
    Ambiguous(usize),
}

/// Compare `search` against `content` at every character boundary; splice
/// if it matches exactly once.
pub fn brute_force_splice_oracle(content: &str, search: &str, replace: &str) -> OracleResult {
    if search.is_empty() {
        return OracleResult::EmptySearch;
    }
    let hay = content.as_bytes();
    let needle = search.as_bytes();
    let mut hits = Vec::new();
    for start in 0..hay.len() {
        if !content.is_char_boundary(start) || start + needle.len() > hay.len() {
            continue;
        }
        if &hay[start..start + needle.len()] == needle {
            hits.push(start);
        }
    }
    match hits.as_slice() {
        [] => OracleResult::NotFound,
        [at] => {
            let mut out = String::new();
            out.push_str(&content[..*at]);
            out.push_str(replace);
            out.push_str(&content[at + search.len()..]);
            OracleResult::Spliced(out)
        }
        many => OracleResult::Ambiguous(many.len()),
    }
}
