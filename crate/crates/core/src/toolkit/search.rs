use std::path::Path;

use walkdir::WalkDir;

use super::workspace::{SandboxError, Workspace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub path: String,
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchList {
    pub matches: Vec<Match>,
    pub capped: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("directory `{0}` does not exist")]
    MissingDir(String),
    #[error("search pattern is empty")]
    EmptyPattern,
}

const MAX_SHOWN_LINE: usize = 300;

impl MatchList {
    pub fn render(&self) -> String {
        if self.matches.is_empty() {
            return "No matches found.".to_string();
        }
        let mut out = String::new();
        for m in &self.matches {
            let text: String = m.text.chars().take(MAX_SHOWN_LINE).collect();
            out.push_str(&format!("{}:{}: {}\n", m.path, m.line, text));
        }
        if self.capped {
            out.push_str(&format!("[showing the first {} matches; narrow the search]", self.matches.len()));
        } else {
            out.push_str(&format!("[{} matches]", self.matches.len()));
        }
        out
    }
}

fn is_text(bytes: &[u8]) -> bool {
    !bytes.contains(&0) && std::str::from_utf8(bytes).is_ok()
}

/// Literal, case-sensitive substring search over the text files below `dir`.
/// Files are visited in sorted path order; `.git` directories, symlinks,
/// binary files and files larger than `max_file_bytes` are skipped.
pub fn search(
    ws: &Workspace,
    pattern: &str,
    dir: Option<&str>,
    cap: usize,
    max_file_bytes: u64,
) -> Result<MatchList, SearchError> {
    if pattern.is_empty() {
        return Err(SearchError::EmptyPattern);
    }
    let base = match dir {
        Some(d) if !d.trim().is_empty() && d != "." => ws.resolve(d)?,
        _ => ws.root().to_path_buf(),
    };
    if !base.is_dir() {
        return Err(SearchError::MissingDir(dir.unwrap_or(".").to_string()));
    }
    let mut list = MatchList::default();
    let walker = WalkDir::new(&base)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.file_type().is_dir() && e.file_name() == ".git"));
    for entry in walker.filter_map(Result::ok) {
        if !entry.file_type().is_file() {
            continue;
        }
        if entry.metadata().map_or(true, |m| m.len() > max_file_bytes) {
            continue;
        }
        let Ok(bytes) = std::fs::read(entry.path()) else { continue };
        if !is_text(&bytes) {
            continue;
        }
        let text = std::str::from_utf8(&bytes).expect("checked utf-8");
        if !text.contains(pattern) {
            continue;
        }
        let path = ws.display_path(Path::new(entry.path()));
        for (i, line) in text.lines().enumerate() {
            if line.contains(pattern) {
                if list.matches.len() == cap {
                    list.capped = true;
                    return Ok(list);
                }
                list.matches.push(Match { path: path.clone(), line: i + 1, text: line.to_string() });
            }
        }
    }
    Ok(list)
}
