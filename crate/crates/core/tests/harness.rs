use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use serde_json::json;

use seper::gateway::{
    EntailmentJudgment, Gateway, PromptMatcher, Script, ScriptedGeneration, TableEntailment,
};
use seper::harness::report::{report_to_csv, report_to_json, CSV_COLUMNS};
use seper::harness::{
    build_prompt, load_report, parse_dataset, run_benchmark, run_records, EvalRecord, HarnessError,
    RunConfig, RunOptions,
};

fn case_one(id: &str) -> EvalRecord {
    EvalRecord::new(
        id,
        "who sings does he love me with reba",
        vec!["Linda Davis".into()],
        vec!["Reba McEntire and Linda Davis recorded it as a duet.".into()],
    )
}

fn contradicting() -> Arc<TableEntailment> {
    Arc::new(TableEntailment::new().otherwise(EntailmentJudgment::contradicted()))
}

/// `helpful` gets the right answer only with context; `useless` gets it
/// wrong both times.
fn two_record_gateway(helpful: &EvalRecord, useless: &EvalRecord) -> Gateway {
    let generation = ScriptedGeneration::new("scripted")
        .for_prompt(
            build_prompt(helpful, false).unwrap(),
            Script::repeat("Reba McEntire", 10),
        )
        .for_prompt(
            build_prompt(helpful, true).unwrap(),
            Script::repeat("Linda Davis", 10),
        )
        .for_prompt(
            build_prompt(useless, false).unwrap(),
            Script::repeat("Reba McEntire", 10),
        )
        .for_prompt(
            build_prompt(useless, true).unwrap(),
            Script::repeat("Reba McEntire", 10),
        );
    Gateway::new(Arc::new(generation), contradicting())
}

#[test]
fn two_record_report() {
    let helpful = case_one("a");
    let mut useless = case_one("b");
    useless.question = "who sings does he love me with reba?".into();
    let gw = two_record_gateway(&helpful, &useless);
    let report = run_records(
        &gw,
        &[useless.clone(), helpful.clone()],
        &RunOptions::default(),
    )
    .unwrap();

    assert!(report.failures.is_empty());
    let deltas: Vec<f64> = report
        .rows
        .iter()
        .map(|r| r.hard.as_ref().unwrap().delta)
        .collect();
    assert_eq!(deltas, [1.0, 0.0]);
    assert_eq!(report.rows[0].record_id, "a");
    assert_eq!(report.summary.rows, 2);
}

#[test]
fn perfect_correlation_with_gold() {
    // Gold 1 / 0 / 1 against ΔSePer 1 / 0 / 1.
    let records: Vec<EvalRecord> = ["x1", "x2", "x3"]
        .iter()
        .zip([1.0, 0.0, 1.0])
        .map(|(id, g)| {
            let mut r = case_one(id);
            r.question = format!("question {id}");
            r.with_gold_utility(g)
        })
        .collect();
    let mut generation = ScriptedGeneration::new("scripted");
    for r in &records {
        let after = if r.gold_utility == Some(1.0) {
            "Linda Davis"
        } else {
            "Reba McEntire"
        };
        generation = generation
            .for_prompt(
                build_prompt(r, false).unwrap(),
                Script::repeat("Reba McEntire", 4),
            )
            .for_prompt(build_prompt(r, true).unwrap(), Script::repeat(after, 4));
    }
    let gw = Gateway::new(Arc::new(generation), contradicting());
    let report = run_records(&gw, &records, &RunOptions::default()).unwrap();
    let c = report.summary.correlations["delta_seper_hard"]
        .result
        .clone()
        .unwrap();
    assert_eq!(c.r, 1.0);
    assert_eq!((c.n, c.t, c.p_two_sided), (3, None, 0.0));
}

#[test]
fn two_records_are_too_few_to_correlate() {
    let a = case_one("a").with_gold_utility(1.0);
    let mut b = case_one("b").with_gold_utility(0.0);
    b.question.push('?');
    let report = run_records(&two_record_gateway(&a, &b), &[a, b], &RunOptions::default()).unwrap();
    let entry = &report.summary.correlations["delta_seper_hard"];
    assert_eq!(entry.n, 2);
    assert!(entry.result.is_none());
    assert!(entry.note.is_some());
}

#[test]
fn deterministic_repetitions_have_zero_spread() {
    let record = case_one("a");
    let gw = two_record_gateway(&record, &case_one("unused"));
    let options = RunOptions {
        repetitions: 5,
        ..RunOptions::default()
    };
    let report = run_records(&gw, &[record], &options).unwrap();
    assert_eq!(report.rows.len(), 5);
    let d = &report.summary.dispersion["delta_seper_hard"];
    assert_eq!((d.mean, d.std), (1.0, 0.0));
}

#[test]
fn failing_record_is_logged_and_run_continues() {
    let good = case_one("good");
    let mut bad = case_one("bad");
    bad.question = "unscripted".into();
    let gw = two_record_gateway(&good, &case_one("other"));
    let report = run_records(&gw, &[bad, good], &RunOptions::default()).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].record_id, "bad");
    let csv = report_to_csv(&report).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().last().unwrap().contains("failed"));
}

#[test]
fn skip_known_excludes_rows_from_correlation() {
    let records: Vec<EvalRecord> = (0..4)
        .map(|i| {
            let mut r = case_one(&format!("k{i}"));
            r.question = format!("q{i}");
            r.with_gold_utility(i as f64 / 4.0)
        })
        .collect();
    // k0 already knows the answer; the rest learn it from context.
    let generation = ScriptedGeneration::new("scripted")
        .with_rule(
            PromptMatcher::Contains(vec!["Question: q0".into()]),
            Script::repeat("Linda Davis", 3),
        )
        .with_rule(
            PromptMatcher::Contains(vec!["given document".into()]),
            Script::repeat("Linda Davis", 3),
        )
        .with_rule(
            PromptMatcher::Contains(vec!["own knowledge".into()]),
            Script::repeat("Reba", 3),
        );
    let gw = Gateway::new(Arc::new(generation), contradicting());
    let options = RunOptions {
        skip_known: Some(0.999),
        ..RunOptions::default()
    };
    let report = run_records(&gw, &records, &options).unwrap();
    assert!(report.rows[0].skipped_known);
    assert_eq!(report.summary.skipped_known, 1);
    assert_eq!(report.summary.correlations["delta_seper_hard"].n, 3);
}

#[test]
fn csv_shapes() {
    let gw = two_record_gateway(&case_one("a"), &case_one("b"));
    let empty = run_records(&gw, &[], &RunOptions::default()).unwrap();
    let csv = report_to_csv(&empty).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>(), [CSV_COLUMNS.join(",")]);

    let one = run_records(&gw, &[case_one("a")], &RunOptions::default()).unwrap();
    let csv = report_to_csv(&one).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("a,0,"));
}

#[test]
fn json_is_reproducible() {
    let run = || {
        let gw = two_record_gateway(&case_one("a"), &case_one("b"));
        report_to_json(&run_records(&gw, &[case_one("a")], &RunOptions::default()).unwrap())
            .unwrap()
    };
    let (first, second) = (run(), run());
    assert_eq!(first, second);
    assert!(first.contains("\"delta\": 1.000000"));
}

#[test]
fn dataset_errors_carry_line_numbers() {
    let err = parse_dataset("{\"id\": \"a\", \"question\": \"q\", \"answers\": [\"x\"]}\n{oops")
        .unwrap_err();
    assert!(
        matches!(err, HarnessError::MalformedJson { line: 2, .. }),
        "{err:?}"
    );
    let err = parse_dataset("{\"id\": \"a\", \"answers\": [\"x\"]}").unwrap_err();
    assert!(
        matches!(err, HarnessError::MissingField { line: 1, ref field } if field == "question")
    );
    let line = "{\"id\": \"a\", \"question\": \"q\", \"answers\": [\"x\"]}";
    let err = parse_dataset(&format!("{line}\n\n{line}")).unwrap_err();
    assert!(
        matches!(
            err,
            HarnessError::DuplicateId {
                line: 3,
                first_line: 1,
                ..
            }
        ),
        "{err:?}"
    );
}

fn write_fixture_dir(dir: &Path) {
    let records = [
        json!({"id": "r1", "question": "q one", "answers": ["Linda Davis"], "contexts": ["doc"], "gold_utility": 1.0}),
        json!({"id": "r2", "question": "q two", "answers": ["Linda Davis"], "contexts": ["doc"], "gold_utility": 0.0}),
        json!({"id": "r3", "question": "q three", "answers": ["Linda Davis"], "contexts": ["doc"], "gold_utility": 0.5}),
    ];
    let lines: Vec<String> = records.iter().map(|r| r.to_string()).collect();
    std::fs::write(dir.join("data.jsonl"), lines.join("\n")).unwrap();
    let weighted =
        |p: f64| json!({"weighted": [[{"text": "Linda Davis"}, p], [{"text": "Reba"}, 1.0 - p]]});
    let script = json!({
        "rules": [
            {"matcher": {"contains": ["given document", "q one"]}, "script": weighted(0.9)},
            {"matcher": {"contains": ["given document", "q three"]}, "script": weighted(0.6)},
        ],
        "fallback": weighted(0.3),
    });
    std::fs::write(dir.join("script.json"), script.to_string()).unwrap();
    let table = json!({"entries": [], "otherwise": {"p_entail": 0.0, "p_neutral": 0.0, "p_contradict": 1.0}});
    std::fs::write(dir.join("nli.json"), table.to_string()).unwrap();
    std::fs::write(
        dir.join("run.toml"),
        r#"
dataset = "data.jsonl"
cache_dir = "cache"

[sampling]
n = 20
seed = 3

[generation]
kind = "scripted_generation"
model_id = "scripted"
fixture = "script.json"

[entailment]
kind = "table_entailment"
model_id = "table"
fixture = "nli.json"
"#,
    )
    .unwrap();
}

#[test]
fn parallelism_does_not_change_report_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_dir(dir.path());
    let mut config = RunConfig::load(&dir.path().join("run.toml")).unwrap();
    config.cache_dir = None;
    config.repetitions = 3;
    let render = |parallelism: usize| {
        let mut c = config.clone();
        c.generation.parallelism_limit = parallelism;
        report_to_json(&run_benchmark(&c).unwrap()).unwrap()
    };
    assert_eq!(render(1), render(4));
}

fn seper_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seper"))
}

#[test]
fn cli_run_correlate_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_dir(dir.path());
    let config = dir.path().join("run.toml");
    let report = dir.path().join("out/report.json");

    let status = seper_bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--variant", "hard", "--tau", "0.6", "--out"])
        .arg(&report)
        .status()
        .unwrap();
    assert!(status.success());
    let loaded = load_report(&report).unwrap();
    assert_eq!(loaded.rows.len(), 3);
    assert_eq!(loaded.settings.variants, ["hard"]);
    assert_eq!(loaded.settings.tau, 0.6);
    assert!(loaded.rows.iter().all(|r| r.soft.is_none()));

    let csv = seper_bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--format", "csv"])
        .output()
        .unwrap();
    assert!(csv.status.success());
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 4);

    let out = seper_bin()
        .args(["correlate", "--report"])
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"delta_seper_hard\""));

    let listed = seper_bin()
        .args(["cache", "list", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(listed.status.success());
    assert_eq!(String::from_utf8(listed.stdout).unwrap().lines().count(), 6);
    let purged = seper_bin()
        .args(["cache", "purge", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8(purged.stdout).unwrap().trim(),
        "removed 6 entries"
    );
}

#[test]
fn cli_score_single_question() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture_dir(dir.path());
    let out = seper_bin()
        .args(["score", "--config"])
        .arg(dir.path().join("run.toml"))
        .args([
            "--question",
            "q one",
            "--answer",
            "Linda Davis",
            "--context",
            "doc",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["hard"]["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn cli_reports_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "dataset = 3").unwrap();
    let out = seper_bin()
        .args(["run", "--config"])
        .arg(dir.path().join("bad.toml"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn variant_labels_in_settings() {
    let gw = two_record_gateway(&case_one("a"), &case_one("b"));
    let report = run_records(&gw, &[], &RunOptions::default()).unwrap();
    assert_eq!(report.settings.variants, ["hard", "soft"]);
    assert_eq!(report.settings.pair_mode, "question_prefixed");
}
