use lita_core::eval::{evaluate, read_transcript, run_once, EvalOptions, ScriptDir, ScriptFile};
use lita_core::{load_manifest, AgentConfig, Manifest, Outcome, Variant};

fn manifest() -> Manifest {
    load_manifest(&lita_fixtures::manifest_path()).unwrap()
}

#[test]
fn every_pinned_session_replays_to_its_digest() {
    let manifest = manifest();
    for session in lita_fixtures::golden().sessions {
        let dir = tempfile::tempdir().unwrap();
        let config = AgentConfig::preset(session.variant.parse().unwrap());
        let task = manifest.task(&session.task_id).unwrap();
        let run = run_once(task, &config, &ScriptFile(session.script_path()), &EvalOptions::new(dir.path()), 1);
        assert_eq!(run.infra_failure, None);
        assert_eq!(run.transcript_digest.as_deref(), Some(session.digest.as_str()), "{}", session.script);
        let cp = run.checkpoint.unwrap();
        assert_eq!(cp.pass_in_2_tests, session.expected.pass_in_2_tests, "{}", session.script);
        assert_eq!(cp.pass_in_budget, session.expected.pass_in_budget, "{}", session.script);
        assert_eq!(run.agent_validations.len(), session.expected.agent_validations);
        assert_eq!(cp.turns_used, session.turns);
        let t = read_transcript(dir.path(), &run).unwrap();
        assert_eq!(t.outcome, Outcome::Finished);
        let on_disk = std::fs::read(dir.path().join(&run.dir).join("transcript.jsonl")).unwrap();
        assert_eq!(on_disk, t.to_jsonl());
    }
}

#[test]
fn diff_session_records_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = manifest();
    let run = run_once(
        manifest.task("toy-bugfix").unwrap(),
        &AgentConfig::preset(Variant::LitaDiff),
        &ScriptFile(lita_fixtures::extra_script("toy-bugfix-diff.jsonl")),
        &EvalOptions::new(dir.path()),
        1,
    );
    let ledger = run.edit_ledger;
    assert_eq!((ledger.attempts, ledger.successes, ledger.fallbacks), (2, 2, 1));
}

#[test]
fn snapshots_follow_agent_validations() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = manifest();
    let run = run_once(
        manifest.task("toy-bugfix").unwrap(),
        &AgentConfig::preset(Variant::Lita),
        &ScriptFile(lita_fixtures::scripts_dir().join("toy-bugfix.jsonl")),
        &EvalOptions::new(dir.path()),
        1,
    );
    // Validations at turns 1, 4 and 6; the second is run with doubled spaces.
    assert_eq!(run.agent_validations, [1, 4, 6]);
    let run_dir = dir.path().join(&run.dir);
    for n in 1..=3 {
        assert!(run_dir.join(format!("snap-{n}/lib/stats.sh")).is_file());
    }
    let snap2 = std::fs::read_to_string(run_dir.join("snap-2/lib/stats.sh")).unwrap();
    assert!(snap2.contains("total / $#") && snap2.contains("-lt"));
}

#[test]
fn manifest_eval_with_script_dir() {
    let dir = tempfile::tempdir().unwrap();
    let mut options = EvalOptions::new(dir.path());
    options.workers = 3;
    let report = evaluate(
        &manifest().tasks,
        &AgentConfig::preset(Variant::Lita),
        &ScriptDir(lita_fixtures::scripts_dir()),
        &options,
        None,
    )
    .unwrap();
    assert_eq!(report.evaluated_tasks, 3);
    assert_eq!(report.solved_in_budget, 3);
    assert_eq!(report.solved_in_2_tests, 2);
    assert_eq!(report.cost, None);
    // One str_replace in toy-wordcount misses.
    assert_eq!(report.edit_attempts, 5);
    assert_eq!(report.edit_adherence_micro, Some(0.8));
}
