//! Benchmark task instances and the unified task manifest.
//!
//! A manifest is a single JSON document:
//!
//! ```json
//! {
//!   "format": "lita-manifest",
//!   "version": 1,
//!   "benchmark": "toy",
//!   "tasks": [
//!     {
//!       "id": "toy-add",
//!       "language_tag": "sh",
//!       "initial_state": "...",
//!       "task_description": "...",
//!       "output_state": "...",
//!       "validation_steps": "...",
//!       "validation_commands": ["sh test_add.sh"],
//!       "workspace_seed": [
//!         {"path": "add.sh", "text": "add() {\n}\n"},
//!         {"path": "blob.bin", "base64": "AAEC"}
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! Seed entries carry either `text` (UTF-8) or `base64` (arbitrary bytes).

use std::collections::HashSet;
use std::path::{Component, Path};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FORMAT: &str = "lita-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// One file of a task's initial workspace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSeed", into = "RawSeed")]
pub struct SeedFile {
    pub path: String,
    pub contents: Vec<u8>,
}

impl SeedFile {
    pub fn text(path: impl Into<String>, text: impl Into<String>) -> Self {
        Self { path: path.into(), contents: text.into().into_bytes() }
    }
}

#[derive(Serialize, Deserialize)]
struct RawSeed {
    path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base64: Option<String>,
}

impl TryFrom<RawSeed> for SeedFile {
    type Error = String;

    fn try_from(raw: RawSeed) -> Result<Self, Self::Error> {
        let contents = match (raw.text, raw.base64) {
            (Some(text), None) => text.into_bytes(),
            (None, Some(b64)) => BASE64
                .decode(b64.as_bytes())
                .map_err(|e| format!("seed `{}`: invalid base64: {e}", raw.path))?,
            _ => return Err(format!("seed `{}` needs exactly one of `text` or `base64`", raw.path)),
        };
        Ok(SeedFile { path: raw.path, contents })
    }
}

impl From<SeedFile> for RawSeed {
    fn from(seed: SeedFile) -> Self {
        match String::from_utf8(seed.contents) {
            Ok(text) => RawSeed { path: seed.path, text: Some(text), base64: None },
            Err(e) => RawSeed { path: seed.path, text: None, base64: Some(BASE64.encode(e.into_bytes())) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    #[serde(default)]
    pub language_tag: String,
    pub initial_state: String,
    pub task_description: String,
    pub output_state: String,
    pub validation_steps: String,
    pub validation_commands: Vec<String>,
    #[serde(default)]
    pub workspace_seed: Vec<SeedFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub benchmark: String,
    pub tasks: Vec<TaskInstance>,
}

impl Manifest {
    pub fn new(benchmark: impl Into<String>, tasks: Vec<TaskInstance>) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            benchmark: benchmark.into(),
            tasks,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn task(&self, id: &str) -> Option<&TaskInstance> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("reading manifest {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported manifest format `{format}` version {version}")]
    Format { format: String, version: u32 },
    #[error("task #{index}: id is empty")]
    EmptyId { index: usize },
    #[error("task #{index}: duplicate id `{id}`")]
    DuplicateId { index: usize, id: String },
    #[error("task `{task_id}`: field `{field}` is empty")]
    EmptyField { task_id: String, field: &'static str },
    #[error("task `{task_id}`: seed path `{path}` escapes the workspace")]
    PathEscape { task_id: String, path: String },
    #[error("task `{task_id}`: seed path `{path}` appears twice")]
    DuplicateSeed { task_id: String, path: String },
}

/// True when `path` is a nonempty relative path made only of normal
/// components (no root, no `..`).
pub fn is_contained_relative(path: &str) -> bool {
    let p = Path::new(path);
    if path.is_empty() || p.is_absolute() {
        return false;
    }
    let mut normal = 0;
    for c in p.components() {
        match c {
            Component::Normal(_) => normal += 1,
            Component::CurDir => {}
            _ => return false,
        }
    }
    normal > 0
}

impl TaskInstance {
    /// Check the per-task invariants. `index` positions the error.
    pub fn validate(&self, index: usize) -> Result<(), ManifestError> {
        if self.id.trim().is_empty() {
            return Err(ManifestError::EmptyId { index });
        }
        let sections = [
            ("initial_state", &self.initial_state),
            ("task_description", &self.task_description),
            ("output_state", &self.output_state),
            ("validation_steps", &self.validation_steps),
        ];
        for (field, body) in sections {
            if body.trim().is_empty() {
                return Err(ManifestError::EmptyField { task_id: self.id.clone(), field });
            }
        }
        if self.validation_commands.iter().all(|c| c.trim().is_empty()) {
            return Err(ManifestError::EmptyField { task_id: self.id.clone(), field: "validation_commands" });
        }
        let mut seen = HashSet::new();
        for seed in &self.workspace_seed {
            if !is_contained_relative(&seed.path) {
                return Err(ManifestError::PathEscape { task_id: self.id.clone(), path: seed.path.clone() });
            }
            if !seen.insert(seed.path.trim_start_matches("./")) {
                return Err(ManifestError::DuplicateSeed { task_id: self.id.clone(), path: seed.path.clone() });
            }
        }
        Ok(())
    }
}

/// Parse and validate manifest text. Tasks keep document order.
pub fn parse_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let manifest: Manifest = serde_json::from_str(text).map_err(|e| ManifestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if manifest.format != MANIFEST_FORMAT || manifest.version != MANIFEST_VERSION {
        return Err(ManifestError::Format { format: manifest.format, version: manifest.version });
    }
    let mut ids = HashSet::new();
    for (index, task) in manifest.tasks.iter().enumerate() {
        task.validate(index)?;
        if !ids.insert(task.id.as_str()) {
            return Err(ManifestError::DuplicateId { index, id: task.id.clone() });
        }
    }
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
    parse_manifest(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(id: &str) -> TaskInstance {
        TaskInstance {
            id: id.into(),
            language_tag: "sh".into(),
            initial_state: "Files are in the current directory.".into(),
            task_description: "Fix it.".into(),
            output_state: "fix.sh is updated.".into(),
            validation_steps: "Run sh test.sh.".into(),
            validation_commands: vec!["sh test.sh".into()],
            workspace_seed: vec![SeedFile::text("fix.sh", "x\n")],
        }
    }

    #[test]
    fn single_task_manifest_loads() {
        let text = Manifest::new("toy", vec![task("a")]).to_json_pretty();
        let m = parse_manifest(&text).unwrap();
        assert_eq!(m.tasks.len(), 1);
        assert_eq!(m.tasks[0], task("a"));
    }

    #[test]
    fn order_is_preserved() {
        let ids = ["c", "a", "b"];
        let text = Manifest::new("toy", ids.iter().map(|i| task(i)).collect()).to_json_pretty();
        let m = parse_manifest(&text).unwrap();
        let got: Vec<_> = m.tasks.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(got, ids);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = Manifest::new("toy", vec![task("a"), task("a")]).to_json_pretty();
        match parse_manifest(&text) {
            Err(ManifestError::DuplicateId { index, id }) => {
                assert_eq!(index, 1);
                assert_eq!(id, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn escaping_seed_paths_are_rejected() {
        for bad in ["../x", "/etc/passwd", "a/../../b", "", "."] {
            let mut t = task("a");
            t.workspace_seed = vec![SeedFile::text(bad, "")];
            let text = Manifest::new("toy", vec![t]).to_json_pretty();
            match parse_manifest(&text) {
                Err(ManifestError::PathEscape { path, .. }) => assert_eq!(path, bad),
                other => panic!("{bad}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn parse_errors_are_positioned() {
        let err = parse_manifest("{\n  \"format\": \"lita-manifest\",\n  \"version\": 1,\n  \"tasks\": [ oops ]\n}").unwrap_err();
        match err {
            ManifestError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_sections_are_rejected() {
        let mut t = task("a");
        t.output_state = "  ".into();
        assert!(matches!(t.validate(0), Err(ManifestError::EmptyField { field: "output_state", .. })));
    }

    #[test]
    fn binary_seeds_use_base64() {
        let seed = SeedFile { path: "b.bin".into(), contents: vec![0, 159, 146, 150] };
        let json = serde_json::to_string(&seed).unwrap();
        assert!(json.contains("base64"));
        let back: SeedFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, seed);
        assert!(serde_json::from_str::<SeedFile>(r#"{"path":"x"}"#).is_err());
    }
}
