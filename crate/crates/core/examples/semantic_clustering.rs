//! Grouping sampled answers by meaning. Two answers share a cluster when
//! each entails the other with probability at least τ. Cluster masses give
//! the semantic entropy, which ignores paraphrase where predictive entropy
//! does not.
//!
//! ```text
//! cargo run --example semantic_clustering
//! ```

use std::sync::Arc;

use seper::baselines::predictive_entropy;
use seper::gateway::{EntailmentJudgment, Gateway, Script, ScriptedGeneration, TableEntailment};
use seper::semantic_entropy;
use seper::semantics::{cluster_texts, WeightMode, WeightVector, DEFAULT_TAU};

fn entail(p: f64) -> EntailmentJudgment {
    EntailmentJudgment::new(p, 1.0 - p, 0.0).expect("valid probabilities")
}

pub fn run_example() -> Result<(usize, f64, f64), Box<dyn std::error::Error>> {
    let samples = [
        "Paris",
        "It is Paris",
        "Lyon",
        "the capital is Paris",
        "Marseille",
        "Paris",
    ];
    let table = TableEntailment::new()
        .with_symmetric("Paris", "It is Paris", entail(0.97))
        .with_symmetric("Paris", "the capital is Paris", entail(0.91))
        // Entailed one way only, so not equivalent.
        .with("Paris", "Marseille", entail(0.10))
        .with("Marseille", "Paris", entail(0.80))
        .otherwise(EntailmentJudgment::contradicted());
    let gateway = Gateway::new(
        Arc::new(ScriptedGeneration::constant(Script::repeat("unused", 1))),
        Arc::new(table),
    );

    let clusters = cluster_texts(&gateway, &samples, DEFAULT_TAU)?;
    for (k, cluster) in clusters.clusters.iter().enumerate() {
        let members: Vec<&str> = cluster.member_indices.iter().map(|&i| samples[i]).collect();
        println!("cluster {k}: {members:?}");
    }

    let weights = WeightVector::from_weights(vec![1.0 / 6.0; 6], WeightMode::Frequency)?;
    let se = semantic_entropy(&clusters, &weights)?;
    let pe = predictive_entropy(&weights);
    println!("semantic entropy:   {se:.4} nats");
    println!("predictive entropy: {pe:.4} nats");
    let stats = gateway.stats();
    println!(
        "entailment queries: {} ({} answered by string equality)",
        stats.entailment_queries, stats.entailment_short_circuits
    );
    Ok((clusters.len(), se, pe))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
