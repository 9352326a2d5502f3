//! Harness runs with repetitions, parallelism and persisted artifacts.

use std::fs;
use std::path::Path;

use syntagm_agent::backend::{ScriptedBackend, ScriptedReply};
use syntagm_agent::evalharness::{load_suite, Report, RunRecord, Suite};
use syntagm_agent::{run_suite, BackendError, LoopConfig, OutcomeClass, RetryPolicy, SuiteConfig};

const GOOD: &str = r#"{"model": "dvar float+ x;\nminimize cost: x;\nsubject to {\n  floor: x >= 3;\n}\n", "data": ""}"#;
const ALIGNED: &str = r#"{"aligned": true, "assessment": "Matches."}"#;

fn cfg(reps: u32, parallelism: usize, out: Option<&Path>) -> SuiteConfig {
    SuiteConfig {
        loop_cfg: LoopConfig { budget: 2, retry: RetryPolicy::none(), ..Default::default() },
        repetitions: reps,
        parallelism,
        out_dir: out.map(Path::to_path_buf),
        ..Default::default()
    }
}

fn ten_instances(tmp: &Path) -> Suite {
    let path = tmp.join("ten.jsonl");
    let lines: Vec<String> = (0..10)
        .map(|i| serde_json::json!({ "id": format!("q{i}"), "description": format!("problem {i}"), "expected": 3 }).to_string())
        .collect();
    fs::write(&path, lines.join("\n")).unwrap();
    load_suite(&path).unwrap()
}

fn all_correct() -> ScriptedBackend {
    ScriptedBackend::from_replies(vec![
        ScriptedReply::new(ALIGNED).when("<assessment_focus>").keep().usage(50, 5),
        ScriptedReply::new(GOOD).keep().usage(100, 20),
    ])
}

#[test]
fn ten_instances_three_reps_give_thirty_records_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = ten_instances(tmp.path());
    let out = tmp.path().join("out");
    let (report, records) = run_suite(&suite, None, &all_correct(), &cfg(3, 4, Some(&out))).unwrap();
    assert_eq!(records.len(), 30);
    assert_eq!(report.accuracy, 1.0);
    assert_eq!((report.ce_rate, report.re_rate, report.wa_rate), (0.0, 0.0, 0.0));
    // Records come back in suite order whatever the scheduling.
    let order: Vec<(String, u32)> = records.iter().map(|r| (r.instance.clone(), r.repetition)).collect();
    let mut sorted = order.clone();
    sorted.sort_by_key(|(id, rep)| (id[1..].parse::<u32>().unwrap(), *rep));
    assert_eq!(order, sorted);

    let run = out.join("ten/q7/2");
    for f in ["model.mod", "data.dat", "exchanges.jsonl", "telemetry.json", "assessment.txt", "record.json"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    // Averages recomputed from the persisted records match the report.
    let persisted: Vec<RunRecord> = fs::read_to_string(out.join("ten/records.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(persisted.len(), 30);
    let again = Report::from_records("ten", 10, 3, &persisted);
    assert_eq!(again, report);
    let on_disk: Report = serde_json::from_str(&fs::read_to_string(out.join("ten/report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, report);
    assert_eq!(report.avg_prompt_tokens, 150.0);
}

#[test]
fn failing_backend_is_recorded_without_aborting() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = ten_instances(tmp.path());
    let backend = ScriptedBackend::from_fn(|req| {
        if req.user.contains("problem 4") {
            Err(BackendError::Auth { env_var: "KEY".into(), status: 401 })
        } else if req.user.contains("<assessment_focus>") {
            Ok(ScriptedReply::new(ALIGNED))
        } else {
            Ok(ScriptedReply::new(GOOD))
        }
    });
    let (report, records) = run_suite(&suite, None, &backend, &cfg(1, 3, None)).unwrap();
    assert_eq!(records.len(), 10);
    let bad = &records[4];
    assert_eq!(bad.outcome, OutcomeClass::CE);
    assert!(bad.auth_failure);
    assert!(bad.error.as_deref().unwrap().contains("KEY"));
    assert!((report.accuracy - 0.9).abs() < 1e-12);
    let sum = report.accuracy + report.ce_rate + report.re_rate + report.wa_rate;
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn infeasible_artifacts_are_runtime_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("one.jsonl");
    fs::write(&path, r#"{"id": "x", "description": "d", "expected": 1}"#).unwrap();
    let suite = load_suite(&path).unwrap();
    let infeasible = r#"{"model": "dvar float+ x;\nminimize c: x;\nsubject to {\n  neg: x <= -1;\n}\n", "data": ""}"#;
    let backend = ScriptedBackend::from_replies(vec![
        ScriptedReply::new(ALIGNED).when("<assessment_focus>").keep(),
        ScriptedReply::new(infeasible).keep(),
    ]);
    let (_, records) = run_suite(&suite, None, &backend, &cfg(1, 1, None)).unwrap();
    assert_eq!(records[0].outcome, OutcomeClass::RE);
    assert_eq!(records[0].solve_status.as_deref(), Some("infeasible"));
}
