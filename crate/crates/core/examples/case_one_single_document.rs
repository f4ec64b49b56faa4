//! A single relevant document flips the model from a wrong answer to the
//! right one. Without context every sample says "Reba McEntire"; with the
//! document every sample says "Linda Davis". Belief in the reference answer
//! goes from 0 to 1.
//!
//! ```text
//! cargo run --example case_one_single_document
//! ```

use std::sync::Arc;

use seper::gateway::{EntailmentJudgment, Gateway, Script, ScriptedGeneration, TableEntailment};
use seper::harness::build_prompt;
use seper::{evaluate_pair, EvalRecord, SamplingParams, ScoringConfig};

pub fn run_example() -> Result<f64, Box<dyn std::error::Error>> {
    let record = EvalRecord::new(
        "case-1",
        "who sings does he love me with reba",
        vec!["Linda Davis".into()],
        vec![
            "\"Does He Love You\" is a song written by Sandy Knox and Billy Stritch, and recorded \
             as a duet by American country music artists Reba McEntire and Linda Davis."
                .into(),
        ],
    );
    let generation = ScriptedGeneration::new("scripted")
        .for_prompt(
            build_prompt(&record, false)?,
            Script::repeat("Reba McEntire", 10),
        )
        .for_prompt(
            build_prompt(&record, true)?,
            Script::repeat("Linda Davis", 10),
        );
    // Identical strings never reach the table; everything else contradicts.
    let entailment = TableEntailment::new().otherwise(EntailmentJudgment::contradicted());
    let gateway = Gateway::new(Arc::new(generation), Arc::new(entailment));

    let pair = evaluate_pair(
        &gateway,
        &record,
        &SamplingParams::default(),
        &ScoringConfig::default(),
    )?;
    let hard = pair.hard.as_ref().expect("hard variant enabled by default");
    println!("question: {}", record.question);
    println!("SePer without context: {:.3}", hard.before.seper);
    println!("SePer with context:    {:.3}", hard.after.seper);
    println!("ΔSePer:                {:.3}", hard.delta);
    Ok(hard.delta)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
