//! A complete benchmark run from files on disk, using the mock backends:
//! a JSONL dataset, a generation script, an entailment table and a TOML
//! config. The same config with HTTP backends runs against real models.
//!
//! ```text
//! cargo run --example scripted_benchmark
//! ```

use std::path::Path;

use serde_json::json;

use seper::harness::{render_report, run_benchmark, ReportFormat, RunConfig};
use seper::Report;

const DATASET: &str = r#"{"id": "q1", "question": "who wrote hamlet", "answers": ["William Shakespeare", "Shakespeare"], "contexts": ["Hamlet is a tragedy written by William Shakespeare."], "gold_utility": 1.0}
{"id": "q2", "question": "what is the capital of australia", "answers": ["Canberra"], "contexts": ["Sydney is the largest city in Australia."], "gold_utility": 0.0}
{"id": "q3", "question": "when did apollo 11 land", "answers": ["1969"], "contexts": ["Apollo 11 was launched in July 1969."], "gold_utility": 0.6}
{"id": "q4", "question": "who painted the night watch", "answers": ["Rembrandt"], "contexts": ["The Night Watch hangs in the Rijksmuseum."], "gold_utility": 0.2}
"#;

const CONFIG: &str = r#"
dataset = "dev.jsonl"
repetitions = 3

[sampling]
n = 10
seed = 7

[scoring]
tau = 0.5
pair_mode = "bare_answer"

[generation]
kind = "scripted_generation"
model_id = "scripted"
fixture = "script.json"

[entailment]
kind = "table_entailment"
model_id = "table"
fixture = "nli.json"
"#;

fn weighted(entries: &[(&str, f64)]) -> serde_json::Value {
    json!({"weighted": entries.iter().map(|(t, w)| json!([{"text": t}, w])).collect::<Vec<_>>()})
}

fn rule(question: &str, with_context: bool, script: serde_json::Value) -> serde_json::Value {
    let marker = if with_context {
        "given document"
    } else {
        "own knowledge"
    };
    json!({"matcher": {"contains": [marker, format!("Question: {question}")]}, "script": script})
}

fn write_fixtures(dir: &Path) -> std::io::Result<()> {
    let script = json!({
        "model_id": "scripted",
        "rules": [
            rule("who wrote hamlet", false, weighted(&[("Christopher Marlowe", 0.6), ("Shakespeare", 0.4)])),
            rule("who wrote hamlet", true, weighted(&[("William Shakespeare", 0.95), ("Marlowe", 0.05)])),
            rule("what is the capital of australia", false, weighted(&[("Canberra", 0.5), ("Sydney", 0.5)])),
            rule("what is the capital of australia", true, weighted(&[("Canberra", 0.3), ("Sydney", 0.7)])),
            rule("when did apollo 11 land", false, weighted(&[("1969", 0.5), ("1970", 0.5)])),
            rule("when did apollo 11 land", true, weighted(&[("July 1969", 0.8), ("1970", 0.2)])),
            rule("who painted the night watch", false, weighted(&[("Rembrandt", 0.4), ("Vermeer", 0.6)])),
            rule("who painted the night watch", true, weighted(&[("Rembrandt", 0.5), ("Vermeer", 0.5)])),
        ],
    });
    let pair = |p: &str, h: &str, e: f64| json!({"premise": p, "hypothesis": h, "entail": e, "neutral": 1.0 - e, "contradict": 0.0});
    let table = json!({
        "model_id": "table",
        "entries": [
            pair("Shakespeare", "William Shakespeare", 0.9),
            pair("William Shakespeare", "Shakespeare", 0.95),
            pair("July 1969", "1969", 0.9),
            pair("1969", "July 1969", 0.6),
        ],
        "otherwise": {"p_entail": 0.0, "p_neutral": 0.0, "p_contradict": 1.0},
    });
    std::fs::write(dir.join("dev.jsonl"), DATASET)?;
    std::fs::write(
        dir.join("script.json"),
        serde_json::to_string_pretty(&script)?,
    )?;
    std::fs::write(dir.join("nli.json"), serde_json::to_string_pretty(&table)?)?;
    std::fs::write(dir.join("run.toml"), CONFIG)
}

pub fn run_example() -> Result<Report, Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    write_fixtures(dir.path())?;
    let config = RunConfig::load(&dir.path().join("run.toml"))?;
    let report = run_benchmark(&config)?;

    for row in &report.rows {
        let hard = row.hard.as_ref().map_or(f64::NAN, |v| v.delta);
        let soft = row.soft.as_ref().map_or(f64::NAN, |v| v.delta);
        println!(
            "{} rep {}: ΔSePer hard {hard:+.2} soft {soft:+.2}",
            row.record_id, row.repetition
        );
    }
    for (metric, entry) in &report.summary.correlations {
        match &entry.result {
            Some(c) => println!("{metric:<30} r = {:+.3} (p = {:.3})", c.r, c.p_two_sided),
            None => println!("{metric:<30} {}", entry.note.as_deref().unwrap_or("")),
        }
    }
    let csv = render_report(&report, ReportFormat::Csv)?;
    println!("\n{}", csv.lines().next().unwrap_or_default());
    Ok(report)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
