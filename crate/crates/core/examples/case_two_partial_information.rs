//! Partial information moves belief part of the way. Each row of the table
//! is a different set of retrieved documents for the same yes/no question;
//! the model's 10 answers are fixed counts of "Yes" and "No". Utility is
//! measured against the no-document row.
//!
//! ```text
//! cargo run --example case_two_partial_information
//! ```

use std::sync::Arc;

use seper::gateway::{EntailmentJudgment, Gateway, Script, ScriptedGeneration, TableEntailment};
use seper::semantics::WeightMode;
use seper::{
    delta_seper, evaluate_query, Condition, EvalRecord, SamplingParams, ScoringConfig, Variant,
};

const DOC1: &str = "The Laleli Mosque is an 18th-century Ottoman imperial mosque located in \
                    Laleli, Fatih, Istanbul, Turkey.";
const DOC2: &str = "The Esma Sultan Mansion is a historical yalı located on the Bosphorus in the \
                    Ortaköy neighborhood of Istanbul, Turkey.";

/// (documents, yes count, no count)
fn rows() -> Vec<(Vec<&'static str>, usize, usize)> {
    vec![
        (vec![], 10, 0),
        (vec![DOC2], 7, 3),
        (vec![DOC1], 8, 2),
        (vec![DOC1, DOC2], 3, 7),
    ]
}

pub fn run_example() -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    let question =
        "Are the Laleli Mosque and Esma Sultan Mansion located in the same neighborhood?";
    let scoring = ScoringConfig {
        weight_mode: WeightMode::Frequency,
        variants: vec![Variant::Hard],
        ..ScoringConfig::default()
    };
    let sampling = SamplingParams::default();
    let entailment = Arc::new(TableEntailment::new().otherwise(EntailmentJudgment::contradicted()));

    let mut deltas = Vec::new();
    let mut baseline = None;
    println!(
        "{:<12} {:>4} {:>4} {:>8}",
        "documents", "yes", "no", "ΔSePer"
    );
    for (docs, yes, no) in rows() {
        let record = EvalRecord::new(
            "case-2",
            question,
            vec!["No".into()],
            docs.iter().map(|d| d.to_string()).collect(),
        );
        let script = Script::counts(&[("Yes", yes), ("No", no)]);
        let generation = ScriptedGeneration::constant(script);
        let gateway = Gateway::new(Arc::new(generation), entailment.clone());
        let condition = if docs.is_empty() {
            Condition::NoContext
        } else {
            Condition::WithContext
        };
        let estimate = evaluate_query(
            &gateway,
            &record,
            condition,
            Variant::Hard,
            &sampling,
            &scoring,
        )?;
        let before = baseline.get_or_insert_with(|| estimate.clone());
        let delta = delta_seper(before.clone(), estimate)?.delta;

        let label = match docs.as_slice() {
            [] => "none".to_string(),
            _ => docs
                .iter()
                .map(|d| if *d == DOC1 { "doc1" } else { "doc2" })
                .collect::<Vec<_>>()
                .join("+"),
        };
        println!("{label:<12} {yes:>4} {no:>4} {delta:>8.3}");
        deltas.push(delta);
    }
    Ok(deltas)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
