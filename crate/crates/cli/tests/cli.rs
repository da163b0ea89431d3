use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lita(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lita"))
        .args(args)
        .env_remove("LITA_BASE_URL")
        .env_remove("LITA_MODEL")
        .env_remove("LITA_API_KEY")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn manifest() -> String {
    lita_fixtures::manifest_path().display().to_string()
}

fn script(task: &str) -> String {
    format!("script:{}", lita_fixtures::scripts_dir().join(format!("{task}.jsonl")).display())
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn run_with_script_writes_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let out = lita(&["run", "--manifest", &manifest(), "--task", "toy-add", "--backend", &script("toy-add"), "--runs-dir", &path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("outcome: finished") && stdout.contains("pass_in_budget: true"));
    assert!(dir.path().join("toy-add/lita-1/transcript.jsonl").is_file());
    assert!(dir.path().join("toy-add/lita-1/validation.jsonl").is_file());
}

#[test]
fn unsolved_run_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = lita(&["run", "--manifest", &manifest(), "--task", "toy-bugfix", "--backend", &script("toy-add"), "--runs-dir", &path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("pass_in_budget: false"));
}

#[test]
fn unknown_task_is_an_operator_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lita(&["run", "--manifest", &manifest(), "--task", "no-such-task", "--backend", &script("toy-add"), "--runs-dir", &path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("no-such-task"));
}

#[test]
fn live_backend_without_endpoint_fails_before_any_workspace() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let out = lita(&["run", "--manifest", &manifest(), "--task", "toy-add", "--backend", "live", "--runs-dir", &path(&runs)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("LITA_BASE_URL"));
    assert!(!runs.exists());
}

#[test]
fn bad_flags_and_inputs_exit_two() {
    assert_eq!(lita(&[]).status.code(), Some(2));
    assert_eq!(lita(&["run", "--manifest", &manifest()]).status.code(), Some(2));
    assert_eq!(lita(&["run", "--manifest", "/nonexistent.json", "--task", "x", "--backend", "live"]).status.code(), Some(2));
    let bad_variant = lita(&["complexity", "--manifest", &manifest(), "--task", "toy-add", "--variant", "lita_max"]);
    assert_eq!(bad_variant.status.code(), Some(2));
    let bad_backend = lita(&["run", "--manifest", &manifest(), "--task", "toy-add", "--backend", "carrier-pigeon"]);
    assert_eq!(bad_backend.status.code(), Some(2));
    let zero_runs = lita(&["eval", "--manifest", &manifest(), "--backend", &script("toy-add"), "--runs", "0"]);
    assert_eq!(zero_runs.status.code(), Some(2));
    assert_eq!(lita(&["--help"]).status.code(), Some(0));
}

#[test]
fn internal_faults_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = lita(&[
        "eval",
        "--manifest",
        &manifest(),
        "--task",
        "toy-add",
        "--backend",
        &script("toy-add"),
        "--runs-dir",
        &path(&dir.path().join("runs")),
        "--out",
        &path(&blocker.join("report.json")),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));
}

#[test]
fn eval_reports_max_of_runs() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let out = lita(&[
        "eval",
        "--manifest",
        &manifest(),
        "--backend",
        &format!("script:{}", lita_fixtures::scripts_dir().display()),
        "--runs",
        "4",
        "--workers",
        "2",
        "--runs-dir",
        &path(dir.path()),
        "--out",
        &path(&report_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("Pass in 2 Tests") && stdout.contains("4 runs each"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["runs_per_task"], 4);
    assert_eq!(report["aggregation"], "max");
    assert_eq!(report["pass_in_budget"], 1.0);
    assert_eq!(report["tasks"][0]["runs"].as_array().unwrap().len(), 4);

    let shown = lita(&["report", &path(&report_path)]);
    assert_eq!(shown.status.code(), Some(0));
    assert!(text(&shown.stdout).contains("| lita "));
}

#[test]
fn eval_with_pricing_needs_a_priced_model() {
    let dir = tempfile::tempdir().unwrap();
    let pricing = path(&lita_fixtures::pricing_path());
    let base = ["eval", "--manifest", &manifest(), "--task", "toy-add", "--backend", &script("toy-add"), "--pricing", &pricing];
    let runs = path(&dir.path().join("a"));
    let unpriced = lita(&[&base[..], &["--runs-dir", &runs]].concat());
    assert_eq!(unpriced.status.code(), Some(2));
    assert!(text(&unpriced.stderr).contains("scripted"));
    let priced = lita(&[&base[..], &["--runs-dir", &runs, "--model", "claude-opus-4"]].concat());
    assert_eq!(priced.status.code(), Some(0), "{}", text(&priced.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/report.json")).unwrap()).unwrap();
    // 6907 input and 150 output tokens at 15 and 75 per million.
    assert_eq!(report["cost"], "0.114855");
}

#[test]
fn complexity_output_is_stable() {
    let args = ["complexity", "--manifest", &manifest(), "--task", "toy-add", "--variant", "lita_mini"];
    let first = lita(&args);
    assert_eq!(first.status.code(), Some(0));
    assert!(text(&first.stdout).contains("action_count: 2"));
    assert_eq!(first.stdout, lita(&args).stdout);
    let lita6 = lita(&["complexity", "--manifest", &manifest(), "--task", "toy-add", "--variant", "lita", "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&lita6.stdout).unwrap();
    assert_eq!(report["action_count"], 6);
    assert_eq!(report["token_counter_id"], "bytes4");
}

#[test]
fn complexity_counters() {
    let external = lita(&["complexity", "--manifest", &manifest(), "--task", "toy-add", "--counter", "external:wc -c", "--json"]);
    assert_eq!(external.status.code(), Some(0), "{}", text(&external.stderr));
    let report: serde_json::Value = serde_json::from_slice(&external.stdout).unwrap();
    assert_eq!(report["token_counter_id"], "external:wc -c");
    let usage = lita(&["complexity", "--manifest", &manifest(), "--task", "toy-add", "--counter", "usage"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(lita(&["complexity", "--manifest", &manifest(), "--task", "toy-add", "--counter", "words"]).status.code(), Some(2));
}

#[test]
fn import_reproduces_the_fixture_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("manifest.json");
    let sources = lita_fixtures::sources_dir();
    let out = lita(&[
        "import",
        "--completion",
        &path(&sources.join("completion.jsonl")),
        "--exercises",
        &path(&sources.join("exercises")),
        "--language",
        "sh",
        "--bugfix",
        &path(&sources.join("bugfix/bundles.jsonl")),
        "--benchmark",
        "toy",
        "--out",
        &path(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(fs::read(&out_path).unwrap(), fs::read(lita_fixtures::manifest_path()).unwrap());
    assert_eq!(lita(&["import", "--out", &path(&out_path)]).status.code(), Some(2));
}
