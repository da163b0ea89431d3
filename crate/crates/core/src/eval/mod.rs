//! Running tasks and measuring the runs: pass checkpoints, tokens, cost,
//! tool histograms, edit adherence, intrinsic complexity and relative gap.

pub mod checkpoint;
pub mod complexity;
pub mod metrics;
pub mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::agent::{run_task, AgentError, Observer};
use crate::bench::validate::all_passed;
use crate::bench::{copy_tree, detect_agent_validations, materialize_workspace, run_dir, sanitize_task_id, ValidateOptions, ValidationLog};
use crate::config::AgentConfig;
use crate::edits::{macro_adherence, micro_adherence, EditLedger};
use crate::llm::{load_script, ChatBackend};
use crate::message::Usage;
use crate::task::TaskInstance;
use crate::message::{ToolCall, ToolResult};
use crate::toolkit::Workspace;
use crate::transcript::{Outcome, Transcript, TranscriptWriter, Turn};

pub use checkpoint::{checkpoints, CheckpointResult, SnapshotMode, SnapshotObserver};
pub use complexity::{complexity, Bytes4, ComplexityReport, ExternalCounter, TokenCounter, UsageCounter};
pub use metrics::{cost, relative_gap, tool_histogram, HistogramEntry, Price, PricingTable, ToolHistogram};

/// Hands out a backend for each (task, run).
pub trait BackendProvider: Sync {
    fn backend(&self, task: &TaskInstance, run: usize) -> Result<Box<dyn ChatBackend + '_>, String>;
}

/// One backend shared by every run.
pub struct Shared<B>(pub B);

impl<B: ChatBackend> BackendProvider for Shared<B> {
    fn backend(&self, _task: &TaskInstance, _run: usize) -> Result<Box<dyn ChatBackend + '_>, String> {
        Ok(Box::new(&self.0))
    }
}

/// Script files from a directory: `<task>.<run>.jsonl` when present,
/// otherwise `<task>.jsonl`, where `<task>` is the sanitized task id.
pub struct ScriptDir(pub PathBuf);

impl ScriptDir {
    pub fn script_path(&self, task_id: &str, run: usize) -> Option<PathBuf> {
        let name = sanitize_task_id(task_id);
        [format!("{name}.{run}.jsonl"), format!("{name}.jsonl")]
            .into_iter()
            .map(|f| self.0.join(f))
            .find(|p| p.is_file())
    }
}

impl BackendProvider for ScriptDir {
    fn backend(&self, task: &TaskInstance, run: usize) -> Result<Box<dyn ChatBackend + '_>, String> {
        let path = self
            .script_path(&task.id, run)
            .ok_or_else(|| format!("no script for task `{}` run {run} in {}", task.id, self.0.display()))?;
        Ok(Box::new(load_script(&path).map_err(|e| format!("{}: {e}", path.display()))?))
    }
}

/// One script file used for every run.
pub struct ScriptFile(pub PathBuf);

impl BackendProvider for ScriptFile {
    fn backend(&self, _task: &TaskInstance, _run: usize) -> Result<Box<dyn ChatBackend + '_>, String> {
        Ok(Box::new(load_script(&self.0).map_err(|e| format!("{}: {e}", self.0.display()))?))
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub runs_per_task: usize,
    pub workers: usize,
    pub runs_root: PathBuf,
    pub snapshots: SnapshotMode,
    pub validation: ValidateOptions,
}

impl EvalOptions {
    pub fn new(runs_root: impl Into<PathBuf>) -> Self {
        Self {
            runs_per_task: 1,
            workers: 1,
            runs_root: runs_root.into(),
            snapshots: SnapshotMode::All,
            validation: ValidateOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// 1-based run number.
    pub run: usize,
    /// Set when the run could not take place (workspace or backend setup).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infra_failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<CheckpointResult>,
    pub usage: Usage,
    pub edit_ledger: EditLedger,
    pub tool_counts: BTreeMap<String, u64>,
    /// Turn ordinals of the agent's validation runs.
    pub agent_validations: Vec<usize>,
    /// Run directory relative to the runs root.
    pub dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_digest: Option<String>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub runs: Vec<RunResult>,
    /// Best checkpoint over completed runs; `None` if every run failed to start.
    pub best: Option<CheckpointResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: String,
    pub model_id: String,
    pub memory_strategy: String,
    pub max_turns: usize,
    pub runs_per_task: usize,
    pub aggregation: String,
    pub tasks: Vec<TaskResult>,
    pub evaluated_tasks: usize,
    /// Tasks left out of the pass rates because no run could take place.
    pub excluded_tasks: Vec<String>,
    pub solved_in_2_tests: usize,
    pub solved_in_budget: usize,
    /// `None` (written as null) when no task was evaluated.
    pub pass_in_2_tests: Option<f64>,
    pub pass_in_budget: Option<f64>,
    pub usage: Usage,
    /// Unrounded; `None` without pricing for the model.
    pub cost: Option<Decimal>,
    pub tool_histogram: ToolHistogram,
    pub edit_attempts: u64,
    pub edit_adherence_micro: Option<f64>,
    pub edit_adherence_macro: Option<f64>,
    /// Share of successful edits that needed the trailing-whitespace fallback.
    pub edit_fallback_rate: Option<f64>,
    pub wall_time_secs: f64,
}

impl RunReport {
    /// The report with every wall-time field zeroed.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        r.wall_time_secs = 0.0;
        for t in &mut r.tasks {
            for run in &mut t.runs {
                run.wall_time_secs = 0.0;
            }
        }
        r
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn rel(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

fn empty_run(run: usize, dir: String) -> RunResult {
    RunResult {
        run,
        infra_failure: None,
        outcome: None,
        checkpoint: None,
        usage: Usage::default(),
        edit_ledger: EditLedger::default(),
        tool_counts: BTreeMap::new(),
        agent_validations: vec![],
        dir,
        transcript_digest: None,
        wall_time_secs: 0.0,
    }
}

/// Snapshots plus a transcript file that grows one turn at a time.
struct RunObserver<'a> {
    snapshots: SnapshotObserver<'a>,
    writer: Option<TranscriptWriter<std::io::BufWriter<fs::File>>>,
    write_error: Option<String>,
}

impl Observer for RunObserver<'_> {
    fn after_call(&mut self, turn: usize, call: &ToolCall, result: &ToolResult, ws: &Workspace) {
        self.snapshots.after_call(turn, call, result, ws);
    }

    fn after_turn(&mut self, turn: &Turn) {
        if let Some(w) = &mut self.writer {
            if let Err(e) = w.write_turn(turn) {
                self.write_error = Some(e.to_string());
                self.writer = None;
            }
        }
    }
}

/// Validate a fresh copy of `src` so the check cannot alter the original.
fn validate_copy(
    log: &mut ValidationLog,
    label: &str,
    task: &TaskInstance,
    src: &Path,
    scratch: &Path,
    options: ValidateOptions,
) -> Result<bool, String> {
    copy_tree(src, scratch).map_err(|e| e.to_string())?;
    let outcomes = log.run(label, task, scratch, options).map_err(|e| e.to_string());
    let _ = fs::remove_dir_all(scratch);
    Ok(all_passed(task, &outcomes?))
}

/// Run `task` once: materialize, drive the agent, snapshot, validate.
pub fn run_once(
    task: &TaskInstance,
    config: &AgentConfig,
    provider: &dyn BackendProvider,
    options: &EvalOptions,
    run: usize,
) -> RunResult {
    let started = Instant::now();
    let dir = run_dir(&options.runs_root, &task.id, config.variant.as_str(), run);
    let mut result = empty_run(run, rel(&options.runs_root, &dir));
    let fail = |mut r: RunResult, why: String| {
        tracing::warn!(task = %task.id, run, "run failed to start: {why}");
        r.infra_failure = Some(why);
        r
    };
    let ws = match materialize_workspace(task, &dir.join("workspace")) {
        Ok(ws) => ws,
        Err(e) => return fail(result, e.to_string()),
    };
    let backend = match provider.backend(task, run) {
        Ok(b) => b,
        Err(e) => return fail(result, e),
    };
    let transcript_path = dir.join("transcript.jsonl");
    let writer = fs::File::create(&transcript_path)
        .and_then(|f| TranscriptWriter::start(std::io::BufWriter::new(f), &task.id, config.variant.as_str()));
    let writer = match writer {
        Ok(w) => w,
        Err(e) => return fail(result, format!("writing transcript: {e}")),
    };
    let mut observer = RunObserver {
        snapshots: SnapshotObserver::new(task, dir.clone(), options.snapshots),
        writer: Some(writer),
        write_error: None,
    };
    let transcript = match run_task(task, config, &*backend, &ws, &mut observer) {
        Ok(t) => t,
        Err(e) => return fail(result, e.to_string()),
    };
    let finish = |r: RunResult, why: String| fail(r, why);
    let written = match (observer.writer.take(), observer.write_error.take()) {
        (Some(w), None) => w.finish(&transcript).and_then(|mut out| std::io::Write::flush(&mut out)).map_err(|e| e.to_string()),
        (_, Some(e)) => Err(e),
        (None, None) => Err("transcript writer closed early".into()),
    };
    if let Err(e) = written {
        return finish(result, format!("writing transcript: {e}"));
    }
    let observer = observer.snapshots;
    let mut log = match ValidationLog::create(&dir.join("validation.jsonl")) {
        Ok(log) => log,
        Err(e) => return finish(result, format!("creating validation log: {e}")),
    };
    let validations = detect_agent_validations(&transcript, task);
    let mut snapshot_passes = BTreeMap::new();
    if let Some(snap) = observer.snapshots.get(&checkpoint::CHECKPOINT_VALIDATION) {
        let label = format!("snap-{}", checkpoint::CHECKPOINT_VALIDATION);
        match validate_copy(&mut log, &label, task, snap, &dir.join("check-snap"), options.validation) {
            Ok(pass) => {
                snapshot_passes.insert(checkpoint::CHECKPOINT_VALIDATION, pass);
            }
            Err(e) => return finish(result, e),
        }
    }
    let final_pass = match validate_copy(&mut log, "final", task, ws.root(), &dir.join("check-final"), options.validation) {
        Ok(pass) => pass,
        Err(e) => return finish(result, e),
    };
    result.checkpoint = Some(checkpoints(&transcript, &validations, &snapshot_passes, final_pass, config.max_turns));
    result.outcome = Some(transcript.outcome);
    result.usage = transcript.usage();
    result.edit_ledger = transcript.edit_ledger;
    result.tool_counts = metrics::tool_counts([&transcript]);
    result.agent_validations = validations;
    result.transcript_digest = Some(transcript.replay_digest());
    result.wall_time_secs = started.elapsed().as_secs_f64();
    result
}

/// The best of several checkpoints: any run passing counts.
pub fn best_of(runs: &[RunResult]) -> Option<CheckpointResult> {
    runs.iter()
        .filter_map(|r| r.checkpoint)
        .max_by_key(|c| (c.pass_in_budget, c.pass_in_2_tests, std::cmp::Reverse(c.turns_used)))
        .map(|best| {
            let any = |f: fn(&CheckpointResult) -> bool| runs.iter().filter_map(|r| r.checkpoint.as_ref()).any(f);
            CheckpointResult { pass_in_2_tests: any(|c| c.pass_in_2_tests), pass_in_budget: any(|c| c.pass_in_budget), ..best }
        })
}

/// Assemble a report from finished runs, grouped per task in task order.
pub fn build_report(
    tasks: &[TaskInstance],
    config: &AgentConfig,
    runs_per_task: usize,
    runs: Vec<RunResult>,
    pricing: Option<&PricingTable>,
    wall_time_secs: f64,
) -> RunReport {
    let mut by_task: Vec<TaskResult> =
        tasks.iter().map(|t| TaskResult { task_id: t.id.clone(), runs: Vec::new(), best: None }).collect();
    for (i, run) in runs.into_iter().enumerate() {
        by_task[i / runs_per_task].runs.push(run);
    }
    for t in &mut by_task {
        t.best = best_of(&t.runs);
    }
    let evaluated: Vec<&TaskResult> = by_task.iter().filter(|t| t.best.is_some()).collect();
    let excluded_tasks: Vec<String> = by_task.iter().filter(|t| t.best.is_none()).map(|t| t.task_id.clone()).collect();
    let solved_in_2_tests = evaluated.iter().filter(|t| t.best.is_some_and(|b| b.pass_in_2_tests)).count();
    let solved_in_budget = evaluated.iter().filter(|t| t.best.is_some_and(|b| b.pass_in_budget)).count();
    let rate = |n: usize| (!evaluated.is_empty()).then(|| n as f64 / evaluated.len() as f64);
    let all_runs: Vec<&RunResult> = by_task.iter().flat_map(|t| &t.runs).collect();
    let usage: Usage = all_runs.iter().map(|r| r.usage).sum();
    let mut counts = BTreeMap::new();
    for r in &all_runs {
        for (name, c) in &r.tool_counts {
            *counts.entry(name.clone()).or_insert(0) += c;
        }
    }
    let task_ledgers: Vec<EditLedger> = by_task
        .iter()
        .map(|t| {
            let mut l = EditLedger::default();
            t.runs.iter().for_each(|r| l.merge(&r.edit_ledger));
            l
        })
        .collect();
    let mut total = EditLedger::default();
    task_ledgers.iter().for_each(|l| total.merge(l));
    RunReport {
        variant: config.variant.as_str().into(),
        model_id: config.model_id.clone(),
        memory_strategy: match config.memory_strategy {
            crate::config::MemoryStrategy::Linear => "linear".into(),
            crate::config::MemoryStrategy::Summarized => "summarized".into(),
        },
        max_turns: config.max_turns,
        runs_per_task,
        aggregation: "max".into(),
        evaluated_tasks: evaluated.len(),
        excluded_tasks,
        solved_in_2_tests,
        solved_in_budget,
        pass_in_2_tests: rate(solved_in_2_tests),
        pass_in_budget: rate(solved_in_budget),
        usage,
        cost: pricing.and_then(|p| cost(usage, &config.model_id, p).ok()),
        tool_histogram: metrics::histogram_from_counts(&counts),
        edit_attempts: total.attempts,
        edit_adherence_micro: micro_adherence(&task_ledgers),
        edit_adherence_macro: macro_adherence(&task_ledgers),
        edit_fallback_rate: (total.successes > 0).then(|| total.fallbacks as f64 / total.successes as f64),
        tasks: by_task,
        wall_time_secs,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("runs_per_task must be at least 1")]
    ZeroRuns,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("building the worker pool: {0}")]
    Pool(String),
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
}

/// Run every task `runs_per_task` times on up to `workers` threads and
/// aggregate per task by the best run. Per-run failures are recorded in the
/// report; only invalid arguments are errors.
pub fn evaluate(
    tasks: &[TaskInstance],
    config: &AgentConfig,
    provider: &dyn BackendProvider,
    options: &EvalOptions,
    pricing: Option<&PricingTable>,
) -> Result<RunReport, EvalError> {
    if options.runs_per_task == 0 {
        return Err(EvalError::ZeroRuns);
    }
    config.validate().map_err(AgentError::from)?;
    crate::toolkit::registry_for(config).map_err(AgentError::from)?;
    let mut ids = BTreeSet::new();
    for t in tasks {
        if !ids.insert(sanitize_task_id(&t.id)) {
            return Err(EvalError::DuplicateTask(t.id.clone()));
        }
    }
    let started = Instant::now();
    let jobs: Vec<(&TaskInstance, usize)> =
        tasks.iter().flat_map(|t| (1..=options.runs_per_task).map(move |run| (t, run))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let runs: Vec<RunResult> =
        pool.install(|| jobs.par_iter().map(|(task, run)| run_once(task, config, provider, options, *run)).collect());
    Ok(build_report(tasks, config, options.runs_per_task, runs, pricing, started.elapsed().as_secs_f64()))
}

/// Read back a transcript written by [`run_once`].
pub fn read_transcript(runs_root: &Path, run: &RunResult) -> Result<Transcript, crate::transcript::TranscriptError> {
    let path = runs_root.join(&run.dir).join("transcript.jsonl");
    let file = fs::File::open(path)?;
    Transcript::read(std::io::BufReader::new(file))
}
