//! Importers from three source shapes into manifest tasks: function
//! completion items (JSONL), exercise directories, and bug-fix bundles.
//! They only translate formats; the wording they add is fixed and the same
//! for every task of a shape.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use walkdir::WalkDir;

use crate::task::{ManifestError, SeedFile, TaskInstance};

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("unsupported language `{0}` for function-completion items (expected python or sh)")]
    Language(String),
    #[error("no test command for language `{0}`; pass one explicitly")]
    NoTestCommand(String),
    #[error(transparent)]
    Invalid(#[from] ManifestError),
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> ImportError + '_ {
    move |source| ImportError::Io { path: path.to_path_buf(), source }
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ImportError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line)
            .map_err(|e| ImportError::Parse { path: path.to_path_buf(), line: i + 1, message: e.to_string() })?;
        out.push(item);
    }
    Ok(out)
}

fn checked(tasks: Vec<TaskInstance>) -> Result<Vec<TaskInstance>, ImportError> {
    for (i, t) in tasks.iter().enumerate() {
        t.validate(i)?;
    }
    Ok(tasks)
}

/// Every regular file below `dir` as a seed, sorted, skipping `.git` and
/// any directory in `skip`. Symlinks are skipped.
fn seed_dir(dir: &Path, skip: &[&str]) -> Result<Vec<SeedFile>, ImportError> {
    let mut seeds = Vec::new();
    let walker = WalkDir::new(dir).sort_by_file_name().into_iter().filter_entry(|e| {
        let rel = e.path().strip_prefix(dir).unwrap_or(e.path());
        !(e.file_type().is_dir() && (e.file_name() == ".git" || skip.iter().any(|s| rel == Path::new(s))))
    });
    for entry in walker {
        let entry = entry.map_err(|e| ImportError::Io { path: dir.to_path_buf(), source: e.into() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walk stays under dir");
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let contents = fs::read(entry.path()).map_err(io_at(entry.path()))?;
        seeds.push(SeedFile { path: rel.join("/"), contents });
    }
    Ok(seeds)
}

#[derive(Deserialize)]
struct CompletionItem {
    task_id: String,
    prompt: String,
    entry_point: String,
    test: String,
    #[serde(default = "python")]
    language: String,
}

fn python() -> String {
    "python".into()
}

/// Function-completion items, one JSON object per line with `task_id`,
/// `prompt`, `entry_point`, `test` and optionally `language` (`python`
/// by default, or `sh`). The test must define `check`, which receives the
/// entry point.
pub fn import_completion_items(path: &Path) -> Result<Vec<TaskInstance>, ImportError> {
    let items: Vec<CompletionItem> = parse_jsonl(path)?;
    let tasks = items.into_iter().map(completion_task).collect::<Result<Vec<_>, _>>()?;
    checked(tasks)
}

fn completion_task(item: CompletionItem) -> Result<TaskInstance, ImportError> {
    let (ext, runner, harness) = match item.language.as_str() {
        "python" => ("py", "python3", format!("from solution import *\n\n{}\n\ncheck({})\n", item.test.trim_end(), item.entry_point)),
        "sh" => ("sh", "sh", format!(". ./solution.sh\n\n{}\n\ncheck {}\n", item.test.trim_end(), item.entry_point)),
        other => return Err(ImportError::Language(other.to_string())),
    };
    let solution = format!("solution.{ext}");
    let test = format!("test_solution.{ext}");
    let command = format!("{runner} {test}");
    Ok(TaskInstance {
        id: item.task_id,
        language_tag: item.language,
        initial_state: format!(
            "The workspace contains {solution}, which holds the signature and description of `{}`, and {test}, which checks it.",
            item.entry_point
        ),
        task_description: format!("Complete `{}` in {solution} so that it behaves as its description says.", item.entry_point),
        output_state: format!("{solution} contains a working `{}`; {test} is unchanged.", item.entry_point),
        validation_steps: format!("Run `{command}` in the workspace root. It exits with status 0 when the function is correct."),
        validation_commands: vec![command],
        workspace_seed: vec![SeedFile::text(&solution, item.prompt), SeedFile::text(&test, harness)],
    })
}

#[derive(Deserialize, Default)]
struct ExerciseFiles {
    #[serde(default)]
    solution: Vec<String>,
    #[serde(default)]
    test: Vec<String>,
}

#[derive(Deserialize)]
struct ExerciseConfig {
    #[serde(default)]
    files: ExerciseFiles,
}

/// Test command used when none is given.
pub fn default_test_command(language: &str) -> Option<&'static str> {
    match language {
        "python" => Some("python3 -m pytest -q"),
        "go" => Some("go test ./..."),
        "rust" => Some("cargo test"),
        "javascript" => Some("npm test"),
        "sh" => Some("sh run_tests.sh"),
        _ => None,
    }
}

/// One exercise directory: `.docs/instructions.md` holds the statement and
/// `.meta/config.json` lists solution and test files. `.meta` is not copied
/// into the workspace since it holds the reference solution.
pub fn import_exercise(dir: &Path, language: &str, test_command: Option<&str>) -> Result<TaskInstance, ImportError> {
    let command = test_command
        .or_else(|| default_test_command(language))
        .ok_or_else(|| ImportError::NoTestCommand(language.to_string()))?;
    let config_path = dir.join(".meta/config.json");
    let text = fs::read_to_string(&config_path).map_err(io_at(&config_path))?;
    let config: ExerciseConfig = serde_json::from_str(&text)
        .map_err(|e| ImportError::Parse { path: config_path.clone(), line: e.line(), message: e.to_string() })?;
    let slug = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let list = |files: &[String]| if files.is_empty() { "(none listed)".to_string() } else { files.join(", ") };
    Ok(TaskInstance {
        id: slug.clone(),
        language_tag: language.to_string(),
        initial_state: format!(
            "The workspace contains the exercise `{slug}`. Its instructions are in .docs/instructions.md. Solution files: {}. Test files: {}.",
            list(&config.files.solution),
            list(&config.files.test)
        ),
        task_description: "Implement the exercise described in .docs/instructions.md by editing the solution files.".into(),
        output_state: "The solution files implement the described behaviour; the test files are unchanged.".into(),
        validation_steps: format!("Run `{command}` in the workspace root. It exits with status 0 when every test passes."),
        validation_commands: vec![command.to_string()],
        workspace_seed: seed_dir(dir, &[".meta"])?,
    })
}

/// Every exercise directory below `root`, sorted by path.
pub fn import_exercises(root: &Path, language: &str, test_command: Option<&str>) -> Result<Vec<TaskInstance>, ImportError> {
    let mut dirs: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_dir() && e.path().join(".meta/config.json").is_file())
        .map(|e| e.into_path())
        .collect();
    dirs.sort();
    let tasks = dirs.iter().map(|d| import_exercise(d, language, test_command)).collect::<Result<Vec<_>, _>>()?;
    checked(tasks)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Commands {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
struct BugfixBundle {
    instance_id: String,
    problem_statement: String,
    repo_dir: String,
    test_command: Commands,
    #[serde(default)]
    language: String,
}

/// Bug-fix bundles, one JSON object per line with `instance_id`,
/// `problem_statement`, `repo_dir` (relative to the bundle file) and
/// `test_command` (one command or a list).
pub fn import_bugfix_bundles(path: &Path) -> Result<Vec<TaskInstance>, ImportError> {
    let bundles: Vec<BugfixBundle> = parse_jsonl(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut tasks = Vec::new();
    for b in bundles {
        let commands = match b.test_command {
            Commands::One(c) => vec![c],
            Commands::Many(cs) => cs,
        };
        let shown = commands.iter().map(|c| format!("`{c}`")).collect::<Vec<_>>().join(", then ");
        tasks.push(TaskInstance {
            id: b.instance_id,
            language_tag: b.language,
            initial_state: "The workspace is a checkout of the repository in which the issue below was reported.".into(),
            task_description: b.problem_statement,
            output_state: "The repository is changed so that the issue is resolved.".into(),
            validation_steps: format!("Run {shown} in the workspace root. Each exits with status 0 once the issue is fixed."),
            validation_commands: commands,
            workspace_seed: seed_dir(&base.join(&b.repo_dir), &[])?,
        });
    }
    checked(tasks)
}
