//! The hard kernel counts a cluster's mass only if its representative is
//! equivalent to the reference answer. The soft kernel weights every
//! sample by how strongly it entails the answer, so near misses earn
//! partial credit.
//!
//! ```text
//! cargo run --example hard_vs_soft
//! ```

use std::sync::Arc;

use seper::belief::Aggregation;
use seper::gateway::{
    EntailmentJudgment, FinishReason, Gateway, SampledResponse, Script, ScriptedGeneration,
    TableEntailment,
};
use seper::semantics::{cluster_responses, Framing, WeightMode, WeightVector, DEFAULT_TAU};
use seper::Scorer;

fn entail(p: f64) -> EntailmentJudgment {
    EntailmentJudgment::new(p, 1.0 - p, 0.0).expect("valid probabilities")
}

pub fn run_example() -> Result<(f64, f64), Box<dyn std::error::Error>> {
    let texts = ["1969", "July 1969", "the late 1960s", "1972"];
    let responses = texts
        .iter()
        .map(|t| SampledResponse::new(*t, None, FinishReason::Stop))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = WeightVector::from_weights(vec![0.4, 0.3, 0.2, 0.1], WeightMode::RawLoglik)?;
    let answers = vec!["1969".to_string()];

    let table = TableEntailment::new()
        .with_symmetric("July 1969", "1969", entail(0.8))
        .with("the late 1960s", "1969", entail(0.35))
        .with("1969", "the late 1960s", entail(0.9))
        .otherwise(EntailmentJudgment::contradicted());
    let gateway = Gateway::new(
        Arc::new(ScriptedGeneration::constant(Script::repeat("unused", 1))),
        Arc::new(table),
    );

    let framing = Framing::bare();
    let clusters = cluster_responses(&gateway, &responses, DEFAULT_TAU, &framing)?;
    let scorer = Scorer::new(&gateway, DEFAULT_TAU, framing).aggregation(Aggregation::Mean);
    let hard = scorer.seper_hard(&responses, &clusters, &weights, &answers)?;
    let soft = scorer.seper_soft(&responses, &weights, &answers, None)?;

    println!("{} clusters: {:?}", clusters.len(), clusters.labels());
    println!("hard SePer: {:.3}", hard.seper);
    println!("soft SePer: {:.3}", soft.seper);
    Ok((hard.seper, soft.seper))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
