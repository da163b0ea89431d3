use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use crate::edits::{EditError, EditOperation, Splice};

use super::workspace::{SandboxError, Workspace};

#[derive(Debug, thiserror::Error)]
pub enum EditorError {
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("file `{0}` does not exist")]
    Missing(String),
    #[error("`{path}` is a binary file ({bytes} bytes); not shown")]
    Binary { path: String, bytes: u64 },
    #[error("`{0}` already exists; pass overwrite=true to replace it")]
    Exists(String),
    #[error("`{0}` is a directory")]
    IsDirectory(String),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Lines of context shown around an edited region.
const ECHO_CONTEXT: usize = 3;

fn io_err(path: &str) -> impl FnOnce(std::io::Error) -> EditorError + '_ {
    move |source| match source.kind() {
        ErrorKind::NotFound => EditorError::Missing(path.to_string()),
        _ => EditorError::Io { path: path.to_string(), source },
    }
}

fn read_text(abs: &Path, path: &str) -> Result<String, EditorError> {
    if abs.is_dir() {
        return Err(EditorError::IsDirectory(path.to_string()));
    }
    let bytes = fs::read(abs).map_err(io_err(path))?;
    if bytes.contains(&0) {
        return Err(EditorError::Binary { path: path.to_string(), bytes: bytes.len() as u64 });
    }
    String::from_utf8(bytes)
        .map_err(|e| EditorError::Binary { path: path.to_string(), bytes: e.as_bytes().len() as u64 })
}

fn numbered(lines: &[&str], first: usize) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        out.push_str(&format!("{:>6}\t{}\n", first + i, line));
    }
    out
}

fn split_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

/// Show a file with 1-based line numbers. A range is clamped to the file;
/// when clamping changes it a note says so. Directories list their entries.
pub fn view(ws: &Workspace, path: &str, range: (Option<i64>, Option<i64>)) -> Result<String, EditorError> {
    let abs = ws.resolve(path)?;
    if abs.is_dir() {
        let mut names: Vec<String> = fs::read_dir(&abs)
            .map_err(io_err(path))?
            .filter_map(Result::ok)
            .map(|e| {
                let mut name = e.file_name().to_string_lossy().into_owned();
                if e.file_type().is_ok_and(|t| t.is_dir()) {
                    name.push('/');
                }
                name
            })
            .collect();
        names.sort();
        return Ok(if names.is_empty() { "(empty directory)".to_string() } else { names.join("\n") });
    }
    let text = read_text(&abs, path)?;
    let lines = split_lines(&text);
    if lines.is_empty() {
        return Ok("(empty file)".to_string());
    }
    let n = lines.len() as i64;
    let (req_start, req_end) = (range.0.unwrap_or(1), range.1.unwrap_or(n));
    let start = req_start.clamp(1, n);
    let end = req_end.clamp(start, n);
    let mut out = numbered(&lines[(start - 1) as usize..end as usize], start as usize);
    if (start, end) != (req_start, req_end) {
        out.push_str(&format!("[note: requested lines {req_start}-{req_end}; the file has {n} lines, showing {start}-{end}]"));
    } else if out.ends_with('\n') {
        out.pop();
    }
    Ok(out)
}

/// Write a new file, creating parent directories.
pub fn create(ws: &Workspace, path: &str, content: &str, overwrite: bool) -> Result<String, EditorError> {
    let abs = ws.resolve(path)?;
    if abs.is_dir() {
        return Err(EditorError::IsDirectory(path.to_string()));
    }
    if abs.exists() && !overwrite {
        return Err(EditorError::Exists(path.to_string()));
    }
    if let Some(parent) = abs.parent() {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    fs::write(&abs, content).map_err(io_err(path))?;
    Ok(format!("Wrote {} ({} bytes).", ws.display_path(&abs), content.len()))
}

/// Outcome of an edit attempt that reached the edit engine.
#[derive(Debug)]
pub struct ModifyAttempt {
    pub result: Result<String, EditorError>,
    pub fallback: bool,
}

/// Apply an edit to an existing file. Returns `Err` when the file could not
/// be read (no edit was attempted); otherwise the attempt, whose result
/// echoes the changed region with line numbers on success.
pub fn modify(ws: &Workspace, path: &str, edit: &EditOperation) -> Result<ModifyAttempt, EditorError> {
    let abs = ws.resolve(path)?;
    let content = read_text(&abs, path)?;
    let splice = match edit.apply(&content) {
        Ok(splice) => splice,
        Err(e) => return Ok(ModifyAttempt { result: Err(e.into()), fallback: false }),
    };
    if let Err(e) = fs::write(&abs, &splice.text) {
        return Ok(ModifyAttempt { result: Err(io_err(path)(e)), fallback: splice.fallback });
    }
    let echo = echo_region(&splice);
    let note = if splice.fallback { " (matched ignoring trailing whitespace)" } else { "" };
    Ok(ModifyAttempt {
        result: Ok(format!("Edited {}{note}. Changed region:\n{echo}", ws.display_path(&abs))),
        fallback: splice.fallback,
    })
}

fn line_of(text: &str, byte: usize) -> usize {
    text.as_bytes()[..byte.min(text.len())].iter().filter(|&&b| b == b'\n').count()
}

/// Numbered lines covering the inserted region plus some context.
fn echo_region(splice: &Splice) -> String {
    let text = &splice.text;
    let lines = split_lines(text);
    if lines.is_empty() {
        return "(file is now empty)".to_string();
    }
    let first = line_of(text, splice.start);
    let end_byte = (splice.start + splice.inserted_len).saturating_sub(1).max(splice.start);
    let last = line_of(text, end_byte).max(first);
    let lo = first.saturating_sub(ECHO_CONTEXT);
    let hi = (last + ECHO_CONTEXT).min(lines.len() - 1);
    let lo = lo.min(hi);
    let mut out = numbered(&lines[lo..=hi], lo + 1);
    out.pop();
    out
}
