//! Caching sampled responses on disk. Sampling is the expensive step, so a
//! repeated run with the same backend, prompt and sampling parameters reads
//! the responses back instead of calling the model again.
//!
//! ```text
//! cargo run --example response_cache
//! ```

use std::sync::Arc;

use seper::gateway::{
    cache_key, BackendConfig, BackendKind, EntailmentJudgment, Gateway, ResponseCache, Script,
    ScriptedGeneration, TableEntailment,
};
use seper::SamplingParams;

pub fn run_example() -> Result<(bool, bool), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let gateway = || -> Result<Gateway, Box<dyn std::error::Error>> {
        Ok(Gateway::new(
            Arc::new(ScriptedGeneration::constant(Script::counts(&[
                ("Paris", 3),
                ("Lyon", 1),
            ]))),
            Arc::new(TableEntailment::new().otherwise(EntailmentJudgment::contradicted())),
        )
        .with_cache(ResponseCache::open(dir.path())?))
    };
    let params = SamplingParams::default().with_n(4).with_seed(11);
    let prompt = "Question: what is the capital of france";

    let first = gateway()?.sample_traced(prompt, &params)?;
    let second = gateway()?.sample_traced(prompt, &params)?;
    println!("first call cache hit:  {}", first.cache_hit);
    println!("second call cache hit: {}", second.cache_hit);
    assert_eq!(first.responses, second.responses);

    let backend = BackendConfig::new(BackendKind::ScriptedGeneration, "scripted");
    println!("key: {}", cache_key(&backend, prompt, &params));
    let cache = ResponseCache::open(dir.path())?;
    println!("entries on disk: {:?}", cache.keys()?);
    println!("purged: {}", cache.purge()?);
    Ok((first.cache_hit, second.cache_hit))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
