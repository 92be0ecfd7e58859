mod common;

use std::fs;
use std::process::Command;

use common::{answers, garble, stub_config, synth_file, MockPlanner};
use lmplanner::{cmd_evaluate, cmd_export_finetune, cmd_plan, cmd_split, read_results, write_results, CliError, SplitSpec};
use lmplanner_core::backend::{import_finetune_jsonl, BackendMode};
use lmplanner_core::eval::{FallbackPolicy, L2Convention};
use lmplanner_core::scenario::ScenarioKind;
use lmplanner_core::{parse_plan_output, CodecConfig, Horizon, ParseQuality};

#[test]
fn replay_planner_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (path, scenarios) = synth_file(dir.path(), "s.json", None, 100, 0);
    let cfg = stub_config(dir.path(), &path, BackendMode::StubReplayGt);
    let (records, summary) = cmd_plan(&cfg).unwrap();
    assert_eq!(records.len(), 100);
    assert_eq!(summary.clean, 100);
    for (r, s) in records.iter().zip(&scenarios) {
        assert_eq!(r.scenario_id, s.id);
        assert_eq!(r.trajectory.as_ref(), Some(&s.human_trajectory.waypoints));
    }
    let outcome = cmd_evaluate(&cfg.results_path(), &cfg).unwrap();
    assert_eq!(outcome.report.avg_l2(L2Convention::AtStep), 0.0);
    assert_eq!(outcome.report.avg_l2(L2Convention::CumulativeMean), 0.0);
    assert!(!outcome.failure_ceiling_exceeded);
    let md = fs::read_to_string(&outcome.markdown_path).unwrap();
    assert!(md.contains("| L2 (m), at_step (UniAD style) | 0.00 | 0.00 | 0.00 | 0.00 |"));
    assert!(outcome.csv_path.exists());
}

#[test]
fn interference_blind_planner_collides_with_lead_car() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "lead.json", Some(ScenarioKind::LeadVehicle), 30, 0);
    let cfg = stub_config(dir.path(), &path, BackendMode::StubHypothetical);
    cmd_plan(&cfg).unwrap();
    let report = cmd_evaluate(&cfg.results_path(), &cfg).unwrap().report;
    assert!(report.avg_collision_rate() > 0.0);
    assert!(report.avg_l2(L2Convention::AtStep) > 0.0);
}

#[test]
fn shuffled_results_give_identical_report_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "s.json", None, 40, 3);
    let cfg = stub_config(dir.path(), &path, BackendMode::StubHypothetical);
    cmd_plan(&cfg).unwrap();
    let a = cmd_evaluate(&cfg.results_path(), &cfg).unwrap();
    let md_a = fs::read(&a.markdown_path).unwrap();
    let csv_a = fs::read(&a.csv_path).unwrap();

    let mut records = read_results(&cfg.results_path()).unwrap();
    records.reverse();
    records.rotate_left(11);
    let shuffled = dir.path().join("shuffled.jsonl");
    write_results(&shuffled, &records).unwrap();
    let b = cmd_evaluate(&shuffled, &cfg).unwrap();
    assert_eq!(md_a, fs::read(&b.markdown_path).unwrap());
    assert_eq!(csv_a, fs::read(&b.csv_path).unwrap());
}

#[test]
fn empty_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    fs::write(&path, r#"{"scenarios":[]}"#).unwrap();
    let cfg = stub_config(dir.path(), &path, BackendMode::StubReplayGt);
    let err = cmd_plan(&cfg).unwrap_err();
    assert!(matches!(err, CliError::NoScenarios(_)));
    assert!(err.to_string().contains("no scenarios"));
}

#[test]
fn missing_results_file() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "s.json", None, 4, 0);
    let cfg = stub_config(dir.path(), &path, BackendMode::StubReplayGt);
    assert!(matches!(
        cmd_evaluate(&dir.path().join("nope.jsonl"), &cfg),
        Err(CliError::Io { .. })
    ));
    fs::write(dir.path().join("bad.jsonl"), "{oops\n").unwrap();
    assert!(matches!(
        cmd_evaluate(&dir.path().join("bad.jsonl"), &cfg),
        Err(CliError::Results { .. })
    ));
}

#[test]
fn export_split_of_700() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "s.json", None, 700, 0);
    let mut cfg = stub_config(dir.path(), &path, BackendMode::StubReplayGt);
    cfg.split = Some(SplitSpec { fraction: 0.10, seed: 7 });
    let (file, n) = cmd_export_finetune(&cfg).unwrap();
    assert_eq!(n, 70);
    let first = fs::read(&file).unwrap();
    assert_eq!(first.iter().filter(|b| **b == b'\n').count(), 70);

    for rec in import_finetune_jsonl(&file).unwrap() {
        let out = parse_plan_output(rec.assistant().unwrap(), &Horizon::default(), &CodecConfig::default());
        assert_eq!(out.parse_quality, ParseQuality::Clean);
    }
    let meta = fs::read_to_string(dir.path().join("out/finetune.jsonl.meta.json")).unwrap();
    assert!(meta.contains("template_hash"));

    cmd_export_finetune(&cfg).unwrap();
    assert_eq!(first, fs::read(&file).unwrap());
}

#[test]
fn split_manifests_nest_and_depend_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "s.json", None, 700, 0);
    let mut cfg = stub_config(dir.path(), &path, BackendMode::StubReplayGt);
    let mut run = |fraction: f64, seed: u64| {
        cfg.split = Some(SplitSpec { fraction, seed });
        cmd_split(&cfg).unwrap().1.scenario_ids
    };
    let small = run(0.01, 5);
    let mid = run(0.10, 5);
    let big = run(0.50, 5);
    assert_eq!((small.len(), mid.len(), big.len()), (7, 70, 350));
    assert!(small.iter().all(|id| mid.contains(id)));
    assert!(mid.iter().all(|id| big.contains(id)));
    assert_ne!(run(0.10, 6), mid);
    assert_eq!(run(0.10, 5), mid);

    cfg.split = Some(SplitSpec { fraction: 1.5, seed: 0 });
    assert!(matches!(cmd_split(&cfg), Err(CliError::Split(_))));
    cfg.split = Some(SplitSpec { fraction: 0.0, seed: 0 });
    assert!(matches!(cmd_split(&cfg), Err(CliError::Split(_))));
}

#[test]
fn stub_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "s.json", None, 24, 9);
    let mut cfg = stub_config(dir.path(), &path, BackendMode::StubHypothetical);
    cfg.backend.max_in_flight = 8;
    cmd_plan(&cfg).unwrap();
    let a = fs::read(cfg.results_path()).unwrap();
    cmd_plan(&cfg).unwrap();
    assert_eq!(a, fs::read(cfg.results_path()).unwrap());
}

#[test]
fn remote_plan_retries_bad_completions_then_falls_back() {
    let dir = tempfile::tempdir().unwrap();
    let (path, scenarios) = synth_file(dir.path(), "s.json", None, 40, 0);
    // Every fourth prompt is answered badly on its first request only; the
    // prompts of scenarios 0..4 are always answered badly.
    let always_bad: Vec<String> = answers(&scenarios[..4]).into_values().collect();
    let seen = std::sync::Mutex::new(std::collections::HashSet::new());
    let mock = MockPlanner::start(answers(&scenarios), move |i, answer| {
        if always_bad.iter().any(|a| a == answer) {
            return Some(garble(i, answer));
        }
        let first = seen.lock().unwrap().insert(answer.to_string());
        (first && i % 4 == 0).then(|| garble(i, answer))
    });
    let mut cfg = stub_config(dir.path(), &path, BackendMode::Remote);
    cfg.backend.endpoint_url = mock.url();
    cfg.backend.max_retries = 2;
    cfg.backend.api_key = Some("k".into());
    let (records, summary) = cmd_plan(&cfg).unwrap();
    assert_eq!(records.len(), 40);
    assert_eq!(summary.failed, 4);
    assert_eq!(summary.fallbacks, 4);
    assert_eq!(summary.clean, 36);

    let report = cmd_evaluate(&cfg.results_path(), &cfg).unwrap().report;
    assert_eq!(report.fallback_count, 4);
    assert_eq!(report.parse_failure_count, 4);

    cfg.fallback_policy = FallbackPolicy::Exclude;
    let report = cmd_evaluate(&cfg.results_path(), &cfg).unwrap().report;
    assert_eq!(report.evaluated_count, 36);
}

#[test]
fn unreachable_endpoint_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = synth_file(dir.path(), "s.json", None, 2, 0);
    let mut cfg = stub_config(dir.path(), &path, BackendMode::Remote);
    cfg.backend.endpoint_url = "http://127.0.0.1:9".into();
    cfg.backend.max_retries = 0;
    assert!(matches!(cmd_plan(&cfg), Err(CliError::Backend(_))));
}

#[test]
fn in_context_exemplars_reach_the_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (path, scenarios) = synth_file(dir.path(), "s.json", None, 6, 0);
    let (pool_path, _) = synth_file(dir.path(), "pool.json", None, 10, 500);
    let mock = MockPlanner::start(answers(&scenarios), |_, _| None);
    let mut cfg = stub_config(dir.path(), &path, BackendMode::Remote);
    cfg.backend.endpoint_url = mock.url();
    cfg.exemplars = 5;
    cfg.exemplar_scenarios = Some(pool_path);
    let (_, summary) = cmd_plan(&cfg).unwrap();
    assert_eq!(summary.clean, 6);

    cfg.exemplars = 6;
    assert!(matches!(cmd_plan(&cfg), Err(CliError::Prompt(_))));
}

#[test]
fn binary_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_lmplanner");
    let scen = dir.path().join("s.json");
    let out = dir.path().join("out");
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap();

    let o = run(&["synth", "--count", "12", "--seed", "3", "--scenarios", scen.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let common = ["--scenarios", scen.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];

    let o = run(&[&["plan", "--mode", "stub-replay-gt"][..], &common[..]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("12 clean"));

    let o = run(&[&["evaluate"][..], &common[..]].concat());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("| 0.00 | 0.00 | 0.00 | 0.00 |"));

    let o = run(&[&["export-finetune"][..], &common[..]].concat());
    assert!(o.status.success());
    let o = run(&[&["split", "--split-fraction", "0.5", "--split-seed", "1"][..], &common[..]].concat());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("wrote 6 ids"));

    // Every completion garbled: the failure ceiling trips.
    let mut records = read_results(&out.join("results.jsonl")).unwrap();
    for r in &mut records {
        r.raw_text = "no plan".into();
        r.parse_quality = ParseQuality::Failed;
    }
    let bad = dir.path().join("bad.jsonl");
    write_results(&bad, &records).unwrap();
    let o = run(&[&["evaluate", "--results", bad.to_str().unwrap()][..], &common[..]].concat());
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["plan", "--scenarios", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
