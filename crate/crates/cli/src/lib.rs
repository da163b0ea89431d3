//! The `lita` command line: run one task, evaluate a manifest, measure
//! intrinsic complexity, print reports and import benchmark sources.
//!
//! Exit codes: 0 when the command completed, 1 on an internal fault, 2 on
//! an operator error (bad flags, unknown task, missing backend settings).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lita_core::bench::import::{import_bugfix_bundles, import_completion_items, import_exercises};
use lita_core::eval::table::render_report;
use lita_core::eval::{
    complexity, evaluate, run_once, BackendProvider, Bytes4, ComplexityReport, EvalOptions, ExternalCounter,
    PricingTable, RunReport, ScriptDir, ScriptFile, Shared, SnapshotMode, TokenCounter, UsageCounter,
};
use lita_core::llm::{load_script, ChatBackend, LiveBackend, LiveConfig};
use lita_core::transcript::Outcome;
use lita_core::{load_manifest, AgentConfig, Manifest, MemoryStrategy, TaskInstance, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAULT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Something the operator can fix: flags, files, environment.
    #[error("{0}")]
    Operator(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Operator(_) => EXIT_USAGE,
            CliError::Internal(_) => EXIT_FAULT,
        }
    }
}

fn operator(e: impl std::fmt::Display) -> CliError {
    CliError::Operator(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "lita", version, about = "Run and evaluate lite coding agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one task once and validate the result.
    Run(RunArgs),
    /// Run every task of a manifest and write a report.
    Eval(EvalArgs),
    /// Print action count and preloaded tokens of an agent configuration.
    Complexity(ComplexityArgs),
    /// Print the results table of saved reports.
    Report(ReportArgs),
    /// Convert benchmark sources into a task manifest.
    Import(ImportArgs),
}

#[derive(Debug, Args)]
pub struct AgentArgs {
    /// Task manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// lita, lita_diff, lita_mini or lita_reason.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// linear or summarized.
    #[arg(long)]
    pub memory: Option<MemoryStrategy>,
    #[arg(long)]
    pub max_turns: Option<usize>,
    /// Agent config file (TOML); the flags above override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model id sent to the endpoint and used for pricing. Defaults to the
    /// config value, then `LITA_MODEL` for the live backend.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// `live` (endpoint from the environment) or `script:<file or dir>`.
    #[arg(long)]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub agent: AgentArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub task: String,
    /// Run number, used for the run directory and script lookup.
    #[arg(long, default_value_t = 1)]
    pub run: usize,
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub agent: AgentArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Only these tasks (repeatable). All tasks by default.
    #[arg(long)]
    pub task: Vec<String>,
    /// Runs per task; the best run counts.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Pricing table (TOML) for the cost column.
    #[arg(long)]
    pub pricing: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
    /// Report path; defaults to `<runs dir>/report.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only the snapshot at the second agent validation.
    #[arg(long)]
    pub checkpoint_snapshots_only: bool,
    /// Do not print the results table.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[command(flatten)]
    pub agent: AgentArgs,
    #[arg(long)]
    pub task: String,
    /// `bytes4`, `usage` (needs --backend) or `external:<command>`.
    #[arg(long, default_value = "bytes4")]
    pub counter: String,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report files written by `eval`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Function-completion items (JSONL).
    #[arg(long)]
    pub completion: Vec<PathBuf>,
    /// Directory of exercise directories.
    #[arg(long)]
    pub exercises: Vec<PathBuf>,
    /// Language of the exercises.
    #[arg(long, default_value = "python")]
    pub language: String,
    /// Test command of the exercises; defaults per language.
    #[arg(long)]
    pub test_command: Option<String>,
    /// Bug-fix bundles (JSONL).
    #[arg(long)]
    pub bugfix: Vec<PathBuf>,
    /// Benchmark name written into the manifest.
    #[arg(long, default_value = "imported")]
    pub benchmark: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Complexity(a) => cmd_complexity(a),
        Command::Report(a) => cmd_report(a),
        Command::Import(a) => cmd_import(a),
    }
}

fn load(manifest: &Path) -> Result<Manifest, CliError> {
    load_manifest(manifest).map_err(operator)
}

fn find_task<'m>(manifest: &'m Manifest, id: &str) -> Result<&'m TaskInstance, CliError> {
    manifest.task(id).ok_or_else(|| CliError::Operator(format!("unknown task id `{id}`")))
}

enum BackendChoice {
    Live(LiveConfig),
    Script(PathBuf),
}

fn parse_backend(spec: &str) -> Result<BackendChoice, CliError> {
    if spec == "live" {
        return LiveConfig::from_env().map(BackendChoice::Live).map_err(operator);
    }
    match spec.strip_prefix("script:") {
        Some(path) if !path.is_empty() => {
            let path = PathBuf::from(path);
            if !path.exists() {
                return Err(CliError::Operator(format!("script path {} does not exist", path.display())));
            }
            Ok(BackendChoice::Script(path))
        }
        _ => Err(CliError::Operator(format!("unknown backend `{spec}` (expected live or script:<path>)"))),
    }
}

fn agent_config(args: &AgentArgs, backend: Option<&BackendChoice>) -> Result<AgentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => AgentConfig::load(path).map_err(operator)?,
        None => AgentConfig::preset(args.variant.unwrap_or(Variant::Lita)),
    };
    if let Some(v) = args.variant {
        config.variant = v;
    }
    if let Some(m) = args.memory {
        config.memory_strategy = m;
    }
    if let Some(n) = args.max_turns {
        config.max_turns = n;
    }
    if let Some(model) = &args.model {
        config.model_id = model.clone();
    }
    if config.model_id.is_empty() {
        config.model_id = match backend {
            Some(BackendChoice::Live(live)) => live.model_id.clone(),
            _ => "scripted".into(),
        };
    }
    config.validate().map_err(operator)?;
    lita_core::toolkit::registry_for(&config).map_err(operator)?;
    Ok(config)
}

fn provider(choice: BackendChoice, model_id: &str) -> Result<Box<dyn BackendProvider>, CliError> {
    Ok(match choice {
        BackendChoice::Live(mut live) => {
            live.model_id = model_id.to_string();
            Box::new(Shared(LiveBackend::new(live)))
        }
        BackendChoice::Script(path) if path.is_dir() => Box::new(ScriptDir(path)),
        BackendChoice::Script(path) => {
            load_script(&path).map_err(|e| CliError::Operator(format!("{}: {e}", path.display())))?;
            Box::new(ScriptFile(path))
        }
    })
}

fn eval_options(runs_dir: &Path) -> EvalOptions {
    EvalOptions::new(runs_dir)
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let manifest = load(&args.agent.manifest)?;
    let task = find_task(&manifest, &args.task)?;
    let choice = parse_backend(&args.backend.backend)?;
    let config = agent_config(&args.agent, Some(&choice))?;
    let provider = provider(choice, &config.model_id)?;
    if let Err(e) = provider.backend(task, args.run) {
        return Err(CliError::Operator(e));
    }
    let options = eval_options(&args.runs_dir);
    let result = run_once(task, &config, &*provider, &options, args.run);
    if let Some(why) = &result.infra_failure {
        return Err(CliError::Internal(format!("run did not complete: {why}")));
    }
    let check = result.checkpoint.expect("completed runs have a checkpoint");
    let outcome = result.outcome.expect("completed runs have an outcome");
    println!("task: {}", task.id);
    println!("outcome: {}", outcome.as_str());
    println!("turns: {}", check.turns_used);
    println!("agent validations: {}", check.validations_used);
    println!("pass_in_2_tests: {}", check.pass_in_2_tests);
    println!("pass_in_budget: {}", check.pass_in_budget);
    println!("tokens: {} in, {} out", result.usage.input_tokens, result.usage.output_tokens);
    println!("transcript digest: {}", result.transcript_digest.as_deref().unwrap_or_default());
    println!("run dir: {}", args.runs_dir.join(&result.dir).display());
    if outcome == Outcome::BackendError {
        return Err(CliError::Internal("the backend failed during the run; see the transcript".into()));
    }
    Ok(())
}

pub fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let manifest = load(&args.agent.manifest)?;
    let tasks: Vec<TaskInstance> = if args.task.is_empty() {
        manifest.tasks.clone()
    } else {
        args.task.iter().map(|id| find_task(&manifest, id).cloned()).collect::<Result<_, _>>()?
    };
    if args.runs == 0 || args.workers == 0 {
        return Err(CliError::Operator("--runs and --workers must be at least 1".into()));
    }
    let pricing = args.pricing.as_deref().map(PricingTable::load).transpose().map_err(operator)?;
    let choice = parse_backend(&args.backend.backend)?;
    let config = agent_config(&args.agent, Some(&choice))?;
    if let Some(p) = &pricing {
        p.price(&config.model_id).map_err(operator)?;
    }
    let provider = provider(choice, &config.model_id)?;
    let mut options = eval_options(&args.runs_dir);
    options.runs_per_task = args.runs;
    options.workers = args.workers;
    if args.checkpoint_snapshots_only {
        options.snapshots = SnapshotMode::CheckpointOnly;
    }
    let report = evaluate(&tasks, &config, &*provider, &options, pricing.as_ref()).map_err(internal)?;
    let out = args.out.unwrap_or_else(|| args.runs_dir.join("report.json"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(internal)?;
    }
    fs::write(&out, report.to_json_pretty() + "\n").map_err(internal)?;
    if !args.quiet {
        print!("{}", render_report(std::slice::from_ref(&report)));
        println!("\nreport: {}", out.display());
    }
    Ok(())
}

fn render_complexity(r: &ComplexityReport) -> String {
    format!(
        "variant: {}\nmemory: {}\ntask: {}\ntools: {}\naction_count: {}\npreloaded_tokens: {}\n  system_prompt: {}\n  initial_prompt: {}\n  tool_schema: {}\ncounter: {}\n",
        r.variant,
        r.memory_strategy,
        r.task_id,
        r.tools.join(", "),
        r.action_count,
        r.preloaded_tokens,
        r.breakdown.system_prompt,
        r.breakdown.initial_prompt,
        r.breakdown.tool_schema,
        r.token_counter_id
    )
}

pub fn cmd_complexity(args: ComplexityArgs) -> Result<(), CliError> {
    let manifest = load(&args.agent.manifest)?;
    let task = find_task(&manifest, &args.task)?;
    let choice = args.backend.as_deref().map(parse_backend).transpose()?;
    let config = agent_config(&args.agent, choice.as_ref())?;
    let backend: Option<Box<dyn ChatBackend>> = match choice {
        None => None,
        Some(BackendChoice::Live(mut live)) => {
            live.model_id = config.model_id.clone();
            Some(Box::new(LiveBackend::new(live)))
        }
        Some(BackendChoice::Script(path)) => Some(Box::new(
            load_script(&path).map_err(|e| CliError::Operator(format!("{}: {e}", path.display())))?,
        )),
    };
    let counter: Box<dyn TokenCounter + '_> = match args.counter.as_str() {
        "bytes4" => Box::new(Bytes4),
        "usage" => {
            let backend = backend
                .as_deref()
                .ok_or_else(|| CliError::Operator("--counter usage needs --backend".into()))?;
            Box::new(UsageCounter { backend, model_id: config.model_id.clone() })
        }
        other => match other.strip_prefix("external:") {
            Some(cmd) if !cmd.trim().is_empty() => Box::new(ExternalCounter { command: cmd.to_string() }),
            _ => {
                return Err(CliError::Operator(format!(
                    "unknown counter `{other}` (expected bytes4, usage or external:<command>)"
                )))
            }
        },
    };
    let report = complexity(&config, task, &*counter).map_err(internal)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(internal)?);
    } else {
        print!("{}", render_complexity(&report));
    }
    Ok(())
}

pub fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for path in &args.reports {
        let text = fs::read_to_string(path).map_err(|e| CliError::Operator(format!("{}: {e}", path.display())))?;
        let report: RunReport =
            serde_json::from_str(&text).map_err(|e| CliError::Operator(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports).map_err(internal)?);
    } else {
        print!("{}", render_report(&reports));
    }
    Ok(())
}

pub fn cmd_import(args: ImportArgs) -> Result<(), CliError> {
    if args.completion.is_empty() && args.exercises.is_empty() && args.bugfix.is_empty() {
        return Err(CliError::Operator("nothing to import; pass --completion, --exercises or --bugfix".into()));
    }
    let mut tasks = Vec::new();
    for path in &args.completion {
        tasks.extend(import_completion_items(path).map_err(operator)?);
    }
    for dir in &args.exercises {
        tasks.extend(import_exercises(dir, &args.language, args.test_command.as_deref()).map_err(operator)?);
    }
    for path in &args.bugfix {
        tasks.extend(import_bugfix_bundles(path).map_err(operator)?);
    }
    let manifest = Manifest::new(args.benchmark, tasks);
    let text = manifest.to_json_pretty() + "\n";
    lita_core::task::parse_manifest(&text).map_err(internal)?;
    fs::write(&args.out, text).map_err(operator)?;
    println!("wrote {} tasks to {}", manifest.tasks.len(), args.out.display());
    Ok(())
}
