//! Retrieval utility evaluation through the lens of model belief.
//!
//! A language model is sampled N times for a question, the responses are
//! grouped into meaning clusters by bidirectional entailment, and the
//! probability mass the model puts on the reference answers is estimated
//! (SePer). Sampling again with retrieved documents in the prompt and taking
//! the difference gives the utility of those documents (ΔSePer).
//!
//! | module | contents |
//! |---|---|
//! | [`gateway`] | generation/entailment backends, scripted mocks, response cache |
//! | [`semantics`] | sequence likelihoods, sample weights, semantic clustering |
//! | [`belief`] | SePer (hard and soft kernels), semantic entropy, ΔSePer |
//! | [`evaluate`] | one record end to end, both conditions |
//! | [`baselines`] | exact match, ROUGE-L, entropy and perplexity baselines |
//! | [`stats`] | Pearson r, t-test p-values, dispersion |
//! | [`harness`] | JSONL datasets, prompts, benchmark runs, reports |
//!
//! The `examples/` directory has one runnable program per capability.

pub mod baselines;
pub mod belief;
pub mod evaluate;
pub mod gateway;
pub mod harness;
pub mod semantics;
pub mod stats;

pub use belief::{delta_seper, semantic_entropy, BeliefEstimate, Scorer, UtilityResult, Variant};
pub use evaluate::{evaluate_pair, evaluate_query, Condition, ScoringConfig};
pub use gateway::{Gateway, SampledResponse, SamplingParams};
pub use harness::{EvalRecord, Report, RunConfig};
