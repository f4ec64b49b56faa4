//! Lexical and uncertainty baselines computed on the same samples that
//! SePer uses: exact match, ROUGE-L, predictive and semantic entropy, and
//! perplexity.
//!
//! ```text
//! cargo run --example baselines
//! ```

use std::sync::Arc;

use seper::baselines::{baseline_scores, exact_match, normalize_answer, rouge_l_f1};
use seper::gateway::{
    EntailmentJudgment, FinishReason, Gateway, SampledResponse, Script, ScriptedGeneration,
    TableEntailment,
};
use seper::semantics::{cluster_responses, normalize_weights, Framing, WeightMode, DEFAULT_TAU};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let answers = vec!["Linda Davis".to_string()];
    println!(
        "normalize(\"The  Linda Davis!\") = {:?}",
        normalize_answer("The  Linda Davis!")
    );
    println!(
        "EM(\"linda davis.\")      = {}",
        exact_match("linda davis.", &answers)?
    );
    println!(
        "ROUGE-L(the cat sat, the cat) = {:.3}",
        rouge_l_f1("the cat sat", "the cat")
    );

    let responses = vec![
        SampledResponse::new("Linda Davis", Some(vec![-0.1, -0.2]), FinishReason::Stop)?,
        SampledResponse::new("Linda Davis", Some(vec![-0.1, -0.3]), FinishReason::Stop)?,
        SampledResponse::new("Reba McEntire", Some(vec![-1.2, -0.9]), FinishReason::Stop)?,
    ];
    let gateway = Gateway::new(
        Arc::new(ScriptedGeneration::constant(Script::repeat("unused", 1))),
        Arc::new(TableEntailment::new().otherwise(EntailmentJudgment::contradicted())),
    );
    let weights = normalize_weights(&responses, WeightMode::LengthNormalized)?;
    let clusters = cluster_responses(&gateway, &responses, DEFAULT_TAU, &Framing::bare())?;
    let scores = baseline_scores(&responses, &weights, &clusters, &answers)?;
    println!("{}", serde_json::to_string_pretty(&scores)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
