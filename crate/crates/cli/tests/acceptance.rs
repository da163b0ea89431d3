//! Acceptance checks. Runs without the libtest harness so every check prints
//! exactly one PASS/FAIL line; the process fails if any check fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use lita_core::bench::tree_digest;
use lita_core::edits::{apply_diff_block, apply_string_replace, parse_diff_blocks, DiffBlock, EditError};
use lita_core::eval::{
    complexity, cost, read_transcript, relative_gap, run_once, tool_histogram, Bytes4, EvalOptions, PricingTable,
    RunReport, RunResult, ScriptFile,
};
use lita_core::{load_manifest, AgentConfig, MemoryStrategy, Outcome, TaskInstance, Usage, Variant};
use lita_fixtures::{brute_force_splice_oracle, OracleResult};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type NamedCheck = (&'static str, fn() -> Check);

fn task(id: &str) -> TaskInstance {
    let manifest = load_manifest(&lita_fixtures::manifest_path()).expect("fixture manifest loads");
    manifest.task(id).expect("fixture task exists").clone()
}

fn elapsed_within(started: Instant, limit: Duration) -> Result<f64, String> {
    let secs = started.elapsed().as_secs_f64();
    if started.elapsed() > limit {
        return Err(format!("took {secs:.2}s, limit {}s", limit.as_secs()));
    }
    Ok(secs)
}

fn random_text(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const PIECES: [&str; 8] = ["a", "b", "ab", " ", "\n", "\t", "é", "x\n"];
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

fn same_error(oracle: &OracleResult, got: &EditError) -> bool {
    matches!(
        (oracle, got),
        (OracleResult::EmptySearch, EditError::EmptySearch) | (OracleResult::NotFound, EditError::NotFound)
    ) || matches!((oracle, got), (OracleResult::Ambiguous(a), EditError::Ambiguous(b)) if a == b)
}

fn agrees(oracle: &OracleResult, got: &Result<String, EditError>) -> bool {
    match (oracle, got) {
        (OracleResult::Spliced(want), Ok(text)) => want == text,
        (_, Err(e)) => same_error(oracle, e),
        _ => false,
    }
}

fn edit_engines_match_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut exact_cases, mut mismatches) = (0, Vec::new());
    for case in 0..10_000 {
        let content = random_text(&mut rng, 30);
        let search = if rng.gen_bool(0.6) && !content.is_empty() {
            let chars: Vec<char> = content.chars().collect();
            let a = rng.gen_range(0..chars.len());
            let b = rng.gen_range(a..=chars.len());
            chars[a..b].iter().collect()
        } else {
            random_text(&mut rng, 4)
        };
        let replace = random_text(&mut rng, 6);
        let oracle = brute_force_splice_oracle(&content, &search, &replace);
        if !agrees(&oracle, &apply_string_replace(&content, &search, &replace)) {
            mismatches.push(format!("string replace, case {case}"));
        }
        // The diff engine only falls back to whitespace-insensitive matching
        // when there is no exact match; everything else must agree exactly.
        let diff = apply_diff_block(&content, &DiffBlock::new(&search, &replace));
        if oracle != OracleResult::NotFound {
            exact_cases += 1;
            let diff = diff.map(|s| s.text);
            if !agrees(&oracle, &diff) {
                mismatches.push(format!("diff block, case {case}"));
            }
        } else {
            let ok = match &diff {
                Ok(s) => s.fallback,
                Err(EditError::NotFound | EditError::FallbackAmbiguous(_)) => true,
                Err(_) => false,
            };
            if !ok {
                mismatches.push(format!("diff block without exact match, case {case}"));
            }
        }
    }
    let secs = elapsed_within(started, Duration::from_secs(10))?;
    if !mismatches.is_empty() {
        return Err(format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]));
    }
    Ok(format!("10000 cases ({exact_cases} with an exact-match decision for diff blocks), 0 mismatches, {secs:.2}s"))
}

fn fuzz_block_text(rng: &mut ChaCha8Rng) -> String {
    const LINES: [&str; 14] = [
        "<<<<<<< SEARCH",
        "=======",
        ">>>>>>> REPLACE",
        "<<<<<<< SEARCH  ",
        "=======\r",
        ">>>>>>> REPLACE\t",
        " <<<<<<< SEARCH",
        "<<<<<<<SEARCH",
        "====",
        "fn main() {}",
        "",
        "```",
        "é ü",
        "\r",
    ];
    let n = rng.gen_range(0..12);
    let mut text: Vec<String> = (0..n).map(|_| LINES.choose(rng).unwrap().to_string()).collect();
    if rng.gen_bool(0.2) {
        text.push(random_text(rng, 5));
    }
    let mut joined = text.join("\n");
    if rng.gen_bool(0.5) {
        joined.push('\n');
    }
    joined
}

fn diff_grammar_is_total() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut parsed, mut errors) = (0, 0);
    for case in 0..10_000 {
        let text = fuzz_block_text(&mut rng);
        let result = catch_unwind(|| parse_diff_blocks(&text)).map_err(|_| format!("panic on case {case}: {text:?}"))?;
        match result {
            Ok(_) => parsed += 1,
            Err(e) => {
                let lines = text.split('\n').count().max(1);
                if e.line() == 0 || e.line() > lines {
                    return Err(format!("case {case}: error line {} outside 1..={lines}", e.line()));
                }
                errors += 1;
            }
        }
    }
    let secs = elapsed_within(started, Duration::from_secs(10))?;
    Ok(format!("10000 cases: {parsed} parsed, {errors} positioned errors, no panics, {secs:.2}s"))
}

fn replay(session: &lita_fixtures::GoldenSession, runs_root: &Path) -> Result<RunResult, String> {
    let variant: Variant = session.variant.parse()?;
    let config = AgentConfig::preset(variant);
    let options = EvalOptions::new(runs_root);
    let result = run_once(&task(&session.task_id), &config, &ScriptFile(session.script_path()), &options, 1);
    match &result.infra_failure {
        Some(why) => Err(format!("{}: {why}", session.script)),
        None => Ok(result),
    }
}

fn golden_sessions_replay() -> Check {
    let started = Instant::now();
    let golden = lita_fixtures::golden();
    let mut checked = 0;
    for session in golden.sessions.iter().filter(|s| s.script.starts_with("scripts/")) {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = replay(session, a.path())?;
        let second = replay(session, b.path())?;
        let mut bytes = Vec::new();
        for (dir, run) in [(a.path(), &first), (b.path(), &second)] {
            let mut t = read_transcript(dir, run).map_err(|e| e.to_string())?;
            t.wall_time_secs = 0.0;
            bytes.push(t.to_jsonl());
        }
        if bytes[0] != bytes[1] {
            return Err(format!("{}: two replays differ", session.script));
        }
        if first.transcript_digest.as_deref() != Some(session.digest.as_str()) {
            return Err(format!("{}: digest {:?}, expected {}", session.script, first.transcript_digest, session.digest));
        }
        let cp = first.checkpoint.unwrap();
        let want = &session.expected;
        if (cp.pass_in_2_tests, cp.pass_in_budget, cp.validations_used, cp.turns_used)
            != (want.pass_in_2_tests, want.pass_in_budget, want.agent_validations, session.turns)
        {
            return Err(format!("{}: got {cp:?}, expected {want:?}", session.script));
        }
        checked += 1;
    }
    let secs = elapsed_within(started, Duration::from_secs(5))?;
    if checked != 3 {
        return Err(format!("expected 3 golden sessions, found {checked}"));
    }
    Ok(format!("3 sessions byte-identical with pinned digests; seeded bug: pass_in_2_tests=false, pass_in_budget=true; {secs:.2}s"))
}

fn budget_is_enforced() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let config = AgentConfig::preset(Variant::Lita).with_max_turns(50);
    let script = ScriptFile(lita_fixtures::extra_script("long60.jsonl"));
    let result = run_once(&task("toy-add"), &config, &script, &EvalOptions::new(dir.path()), 1);
    let t = read_transcript(dir.path(), &result).map_err(|e| e.to_string())?;
    if t.turns.len() != 50 || t.outcome != Outcome::MaxTurns {
        return Err(format!("{} turns, outcome {}", t.turns.len(), t.outcome.as_str()));
    }
    Ok("60-turn script stopped at 50 turns, outcome max_turns".into())
}

fn complexity_ordering() -> Check {
    let golden = lita_fixtures::golden();
    let t = task(&golden.complexity_task);
    let mut got = Vec::new();
    for pin in &golden.complexity {
        let variant: Variant = pin.variant.parse()?;
        let memory: MemoryStrategy = pin.memory.parse()?;
        let r = complexity(&AgentConfig::preset(variant).with_memory(memory), &t, &Bytes4).map_err(|e| e.to_string())?;
        if (r.action_count, r.preloaded_tokens) != (pin.action_count, pin.preloaded_tokens) {
            return Err(format!(
                "{} {}: ({}, {}), pinned ({}, {})",
                pin.variant, pin.memory, r.action_count, r.preloaded_tokens, pin.action_count, pin.preloaded_tokens
            ));
        }
        got.push((r.action_count, r.preloaded_tokens));
    }
    let counts: Vec<usize> = got.iter().map(|g| g.0).collect();
    if counts != [2, 4, 6, 7] {
        return Err(format!("action counts {counts:?}"));
    }
    if !got.windows(2).all(|w| w[0].1 < w[1].1) {
        return Err(format!("preloaded tokens not increasing: {got:?}"));
    }
    let tokens: Vec<String> = got.iter().map(|g| g.1.to_string()).collect();
    Ok(format!("actions 2 < 4 < 6 < 7, preloaded tokens {} (bytes4)", tokens.join(" < ")))
}

fn cost_matches_reported() -> Check {
    let pricing = PricingTable::load(&lita_fixtures::pricing_path()).map_err(|e| e.to_string())?;
    let c = cost(Usage::new(20_700_000, 900_000), "claude-opus-4", &pricing).map_err(|e| e.to_string())?;
    let value: f64 = c.to_string().parse().unwrap();
    let rel = (value - 376.2).abs() / 376.2;
    if rel >= 0.01 {
        return Err(format!("cost {c} is {:.2}% from 376.2", rel * 100.0));
    }
    Ok(format!("cost(20.7M in, 0.9M out) = {c} vs 376.2, {:.2}% off (limit 1%)", rel * 100.0))
}

fn gap_matches_hand_arithmetic() -> Check {
    // (model, simple, complex, gap worked by hand to 4 places)
    let rows = [
        ("GPT-4.1-mini", 26.4, 22.0, 0.2000),
        ("GPT-4.1", 35.6, 48.6, -0.2675),
        ("Claude 3.7 Sonnet", 53.0, 58.0, -0.0862),
        ("Claude Sonnet 4", 62.0, 68.0, -0.0882),
        ("Claude Opus 4", 62.6, 67.8, -0.0767),
    ];
    for (model, simple, complex, want) in rows {
        let gap = relative_gap(simple, complex).ok_or(format!("{model}: undefined gap"))?;
        if ((gap * 1e4).round() / 1e4 - want).abs() > 1e-9 {
            return Err(format!("{model}: {gap:.6} vs {want:.4}"));
        }
    }
    let example = relative_gap(52.8, 58.0).unwrap();
    if ((example * 1e4).round() / 1e4 + 0.0897).abs() > 1e-9 {
        return Err(format!("52.8 vs 58.0 gave {example:.6}"));
    }
    Ok("5 rows (lightweight agent vs heavy framework) and 52.8 vs 58.0 = -0.0897 agree to 4 places".into())
}

fn run_eval(runs_dir: &Path, workers: usize) -> Result<RunReport, String> {
    let out = runs_dir.join("report.json");
    let args = [
        "lita".to_string(),
        "eval".into(),
        "--manifest".into(),
        lita_fixtures::manifest_path().display().to_string(),
        "--backend".into(),
        format!("script:{}", lita_fixtures::scripts_dir().display()),
        "--model".into(),
        "claude-opus-4".into(),
        "--pricing".into(),
        lita_fixtures::pricing_path().display().to_string(),
        "--runs".into(),
        "2".into(),
        "--workers".into(),
        workers.to_string(),
        "--runs-dir".into(),
        runs_dir.display().to_string(),
        "--out".into(),
        out.display().to_string(),
        "--quiet".into(),
    ];
    let code = lita_cli::run(args);
    if code != 0 {
        return Err(format!("eval exited with {code}"));
    }
    serde_json::from_str(&fs::read_to_string(out).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn histogram_and_usage_conserve() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let report = run_eval(dir.path(), 2)?;
    let mut transcripts = Vec::new();
    let mut run_usage = Usage::default();
    for run in report.tasks.iter().flat_map(|t| &t.runs) {
        let t = read_transcript(dir.path(), run).map_err(|e| e.to_string())?;
        let turn_sum: Usage = t.turns.iter().map(|turn| turn.usage).sum();
        if turn_sum != run.usage || t.usage() != run.usage {
            return Err(format!("{}: turn usage {turn_sum:?} vs run {:?}", run.dir, run.usage));
        }
        let hist = tool_histogram([&t]);
        let hist_total: u64 = hist.values().map(|e| e.count).sum();
        let dispatched = t.dispatched_calls().count() as u64;
        let counted: u64 = run.tool_counts.values().sum();
        if hist_total != dispatched || counted != dispatched {
            return Err(format!("{}: histogram {hist_total}, counts {counted}, dispatched {dispatched}", run.dir));
        }
        run_usage += run.usage;
        transcripts.push(t);
    }
    if run_usage != report.usage {
        return Err(format!("report usage {:?} vs sum of runs {run_usage:?}", report.usage));
    }
    let all = tool_histogram(transcripts.iter());
    let total: u64 = all.values().map(|e| e.count).sum();
    let calls: u64 = transcripts.iter().map(|t| t.dispatched_calls().count() as u64).sum();
    let report_total: u64 = report.tool_histogram.values().map(|e| e.count).sum();
    let mismatch = all.iter().any(|(k, e)| report.tool_histogram.get(k).map(|r| r.count) != Some(e.count));
    if total != calls || report_total != calls || mismatch {
        return Err(format!("histogram {total}, report {report_total}, dispatched {calls}"));
    }
    Ok(format!("{} runs: histogram counts = dispatched calls ({calls}), usage sums match exactly", transcripts.len()))
}

fn sandbox_holds() -> Check {
    let root = tempfile::tempdir().unwrap();
    let outside = root.path().join("outside");
    fs::create_dir_all(&outside).unwrap();
    fs::write(outside.join("outside.txt"), "keep\n").unwrap();
    let template = fs::read_to_string(lita_fixtures::extra_script("sandbox.jsonl")).unwrap();
    let script = root.path().join("sandbox.jsonl");
    fs::write(&script, template.replace("@OUTSIDE@", &outside.display().to_string())).unwrap();
    let before = tree_digest(&outside).unwrap();
    let runs = root.path().join("runs");
    let config = AgentConfig::preset(Variant::Lita);
    let result = run_once(&task("toy-add"), &config, &ScriptFile(script), &EvalOptions::new(&runs), 1);
    if let Some(why) = result.infra_failure {
        return Err(why);
    }
    let after = tree_digest(&outside).unwrap();
    if before != after {
        return Err("files outside the workspace changed".into());
    }
    let run_dir = runs.join(&result.dir);
    let mut entries: Vec<String> =
        fs::read_dir(&run_dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    entries.sort();
    if entries != ["transcript.jsonl", "validation.jsonl", "workspace"] {
        return Err(format!("unexpected entries next to the workspace: {entries:?}"));
    }
    let t = read_transcript(&runs, &result).map_err(|e| e.to_string())?;
    let rejected = t.turns.iter().flat_map(|turn| &turn.results).filter(|r| !r.ok).count();
    if rejected != 7 || !run_dir.join("workspace/inside.txt").is_file() {
        return Err(format!("{rejected} of 7 escape attempts rejected"));
    }
    Ok("7 escape attempts (../, absolute paths, nested ..) rejected; outside digest unchanged".into())
}

fn workers_do_not_change_reports() -> Check {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = run_eval(a.path(), 1)?.without_timing();
    let four = run_eval(b.path(), 4)?.without_timing();
    if one.to_json_pretty() != four.to_json_pretty() {
        return Err("reports differ between workers=1 and workers=4".into());
    }
    Ok(format!(
        "{} tasks x {} runs: identical reports apart from wall time (pass_in_budget {:?})",
        one.tasks.len(),
        one.runs_per_task,
        one.pass_in_budget
    ))
}

/// `None` when no endpoint is configured.
fn live_smoke() -> Option<Check> {
    let configured = ["LITA_BASE_URL", "LITA_MODEL"].iter().all(|v| std::env::var(v).is_ok_and(|s| !s.is_empty()));
    if !configured {
        return None;
    }
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "lita",
        "run",
        "--manifest",
        &lita_fixtures::manifest_path().display().to_string(),
        "--task",
        "toy-add",
        "--backend",
        "live",
        "--max-turns",
        "15",
        "--runs-dir",
        &dir.path().display().to_string(),
    ]
    .map(String::from);
    let code = lita_cli::run(args);
    let transcript = dir.path().join("toy-add/lita-1/transcript.jsonl");
    let parsed = fs::read(&transcript).ok().map(|b| lita_core::Transcript::from_jsonl(&b));
    Some(match (code, parsed) {
        (0, Some(Ok(t))) => Ok(format!("transcript well formed, {} turns, outcome {}", t.turns.len(), t.outcome.as_str())),
        (code, parsed) => {
            let state = match parsed {
                None => "missing".to_string(),
                Some(Ok(_)) => "present".to_string(),
                Some(Err(e)) => format!("malformed: {e}"),
            };
            Err(format!("exit {code}, transcript {state}"))
        }
    })
}

fn main() {
    let checks: [NamedCheck; 10] = [
        ("edit engines agree with the brute-force oracle", edit_engines_match_oracle),
        ("diff grammar is total under fuzzing", diff_grammar_is_total),
        ("golden sessions replay byte-identically", golden_sessions_replay),
        ("turn budget is enforced", budget_is_enforced),
        ("intrinsic complexity ordering", complexity_ordering),
        ("cost formula reproduces the reported cost", cost_matches_reported),
        ("relative gap matches hand arithmetic", gap_matches_hand_arithmetic),
        ("histogram conservation and usage additivity", histogram_and_usage_conserve),
        ("sandbox leaves the outside untouched", sandbox_holds),
        ("worker count does not change the report", workers_do_not_change_reports),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    match live_smoke() {
        None => println!("SKIP [11] live smoke run: set LITA_BASE_URL and LITA_MODEL (and LITA_API_KEY) to enable"),
        Some(Ok(detail)) => println!("PASS [11] live smoke run: {detail}"),
        Some(Err(detail)) => println!("FAIL [11] live smoke run (not gated): {detail}"),
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
