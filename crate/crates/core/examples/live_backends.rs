//! Scoring one question against real model servers.
//!
//! Generation needs an OpenAI-compatible chat-completions server that
//! returns token log-probabilities (vLLM, for example). Entailment needs a
//! service answering `POST {"premise", "hypothesis"}` with
//! `{"entail", "neutral", "contradict"}`, typically wrapping an MNLI
//! cross-encoder such as microsoft/deberta-large-mnli.
//!
//! ```text
//! SEPER_GENERATION_URL=http://localhost:8000/v1 \
//! SEPER_GENERATION_MODEL=meta-llama/Llama-2-7b-chat-hf \
//! SEPER_ENTAILMENT_URL=http://localhost:9000/entail \
//! cargo run --example live_backends
//! ```
//!
//! Without the variables the example prints a note and exits.

use seper::gateway::{BackendConfig, BackendKind, Gateway};
use seper::{evaluate_pair, EvalRecord, SamplingParams, ScoringConfig};

pub fn run_example() -> Result<Option<f64>, Box<dyn std::error::Error>> {
    let (Ok(gen_url), Ok(ent_url)) = (
        std::env::var("SEPER_GENERATION_URL"),
        std::env::var("SEPER_ENTAILMENT_URL"),
    ) else {
        println!("set SEPER_GENERATION_URL and SEPER_ENTAILMENT_URL to run against live servers");
        return Ok(None);
    };
    let model = std::env::var("SEPER_GENERATION_MODEL")
        .unwrap_or_else(|_| "meta-llama/Llama-2-7b-chat-hf".into());
    let mut generation =
        BackendConfig::new(BackendKind::HttpGeneration, model).with_endpoint(gen_url);
    if std::env::var("SEPER_API_KEY").is_ok() {
        generation.auth_env = Some("SEPER_API_KEY".into());
    }
    let entailment =
        BackendConfig::new(BackendKind::HttpEntailment, "microsoft/deberta-large-mnli")
            .with_endpoint(ent_url);
    let gateway = Gateway::from_configs(&generation, &entailment, None)?;

    let record = EvalRecord::new(
        "live",
        "who sings does he love me with reba",
        vec!["Linda Davis".into()],
        vec![
            "\"Does He Love You\" is a song recorded as a duet by American country music \
             artists Reba McEntire and Linda Davis."
                .into(),
        ],
    );
    let sampling = SamplingParams::default().with_seed(0);
    let pair = evaluate_pair(&gateway, &record, &sampling, &ScoringConfig::default())?;
    for (name, utility) in [("hard", &pair.hard), ("soft", &pair.soft)] {
        if let Some(u) = utility {
            println!(
                "{name}: {:.3} -> {:.3} (ΔSePer {:+.3})",
                u.before.seper, u.after.seper, u.delta
            );
        }
    }
    if pair.degraded() {
        println!("server returned no log-probabilities; frequency weights were used");
    }
    Ok(pair.hard.map(|u| u.delta))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
