//! Deterministic generation mock.
//!
//! A [`ScriptedGeneration`] maps prompts to scripts. Response `i` of a call is
//! a pure function of the matched script, the seed and `i`, so repeated calls
//! with the same seed return identical lists.

use std::path::Path;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FinishReason, GatewayError, GenerationBackend, SampledResponse, SamplingParams};

/// One canned answer. When `token_logprobs` is omitted in a fixture file,
/// every whitespace token gets log-probability 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedAnswer {
    pub text: String,
    #[serde(default)]
    pub token_logprobs: Option<Vec<f64>>,
    /// Emit the response without log-probabilities.
    #[serde(default)]
    pub omit_logprobs: bool,
}

impl ScriptedAnswer {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            token_logprobs: None,
            omit_logprobs: false,
        }
    }

    pub fn with_logprobs(text: impl Into<String>, token_logprobs: Vec<f64>) -> Self {
        Self {
            text: text.into(),
            token_logprobs: Some(token_logprobs),
            omit_logprobs: false,
        }
    }

    pub fn without_logprobs(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            token_logprobs: None,
            omit_logprobs: true,
        }
    }

    fn to_response(&self) -> Result<SampledResponse, GatewayError> {
        let logprobs = if self.omit_logprobs {
            None
        } else {
            Some(
                self.token_logprobs
                    .clone()
                    .unwrap_or_else(|| vec![0.0; self.text.split_whitespace().count().max(1)]),
            )
        };
        SampledResponse::new(self.text.clone(), logprobs, FinishReason::Stop)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    /// Response `i` is `answers[i % len]`.
    Cycle(Vec<ScriptedAnswer>),
    /// Responses are drawn i.i.d. from the weighted answers with a
    /// ChaCha8 stream keyed by the seed.
    Weighted(Vec<(ScriptedAnswer, f64)>),
}

impl Script {
    /// `count` copies of one answer, in order.
    pub fn repeat(text: &str, count: usize) -> Self {
        Script::Cycle(vec![ScriptedAnswer::new(text); count])
    }

    /// Answers expanded from `(text, count)` pairs in order, e.g.
    /// `[("Yes", 7), ("No", 3)]`.
    pub fn counts(pairs: &[(&str, usize)]) -> Self {
        Script::Cycle(
            pairs
                .iter()
                .flat_map(|(text, count)| std::iter::repeat_n(ScriptedAnswer::new(*text), *count))
                .collect(),
        )
    }

    fn validate(&self) -> Result<(), GatewayError> {
        match self {
            Script::Cycle(answers) if answers.is_empty() => {
                Err(GatewayError::InvalidConfig("empty cycle script".into()))
            }
            Script::Weighted(entries)
                if entries.is_empty()
                    || entries.iter().any(|(_, w)| !w.is_finite() || *w < 0.0)
                    || entries.iter().all(|(_, w)| *w == 0.0) =>
            {
                Err(GatewayError::InvalidConfig(
                    "weighted script needs non-negative weights with positive total".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, n: usize, seed: u64) -> Result<Vec<SampledResponse>, GatewayError> {
        match self {
            Script::Cycle(answers) => (0..n)
                .map(|i| answers[i % answers.len()].to_response())
                .collect(),
            Script::Weighted(entries) => {
                let dist = WeightedIndex::new(entries.iter().map(|(_, w)| *w))
                    .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|_| entries[dist.sample(&mut rng)].0.to_response())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMatcher {
    Exact(String),
    /// Every listed substring must occur in the prompt.
    Contains(Vec<String>),
}

impl PromptMatcher {
    fn matches(&self, prompt: &str) -> bool {
        match self {
            PromptMatcher::Exact(p) => p == prompt,
            PromptMatcher::Contains(parts) => parts.iter().all(|p| prompt.contains(p.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub matcher: PromptMatcher,
    pub script: Script,
}

/// Generation backend that replays scripts. The first matching rule wins;
/// prompts matching no rule use the fallback script, or fail without one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedGeneration {
    #[serde(default = "default_model_id")]
    pub model_id: String,
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    #[serde(default)]
    pub fallback: Option<Script>,
}

fn default_model_id() -> String {
    "scripted".into()
}

impl ScriptedGeneration {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            rules: Vec::new(),
            fallback: None,
        }
    }

    /// A backend answering every prompt with the same script.
    pub fn constant(script: Script) -> Self {
        Self {
            model_id: default_model_id(),
            rules: Vec::new(),
            fallback: Some(script),
        }
    }

    pub fn with_rule(mut self, matcher: PromptMatcher, script: Script) -> Self {
        self.rules.push(ScriptRule { matcher, script });
        self
    }

    pub fn for_prompt(self, prompt: impl Into<String>, script: Script) -> Self {
        self.with_rule(PromptMatcher::Exact(prompt.into()), script)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let backend: Self = serde_json::from_str(&text)
            .map_err(|e| GatewayError::InvalidConfig(format!("{}: {e}", path.display())))?;
        backend.validate()?;
        Ok(backend)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for rule in &self.rules {
            rule.script.validate()?;
        }
        if let Some(fallback) = &self.fallback {
            fallback.validate()?;
        }
        Ok(())
    }

    fn script_for(&self, prompt: &str) -> Option<&Script> {
        self.rules
            .iter()
            .find(|r| r.matcher.matches(prompt))
            .map(|r| &r.script)
            .or(self.fallback.as_ref())
    }
}

impl GenerationBackend for ScriptedGeneration {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn sample(
        &self,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<SampledResponse>, GatewayError> {
        let script = self
            .script_for(prompt)
            .ok_or_else(|| GatewayError::FixtureGap(format!("no script for prompt {prompt:?}")))?;
        script.validate()?;
        script.sample(params.n, params.seed.unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(responses: &[SampledResponse]) -> Vec<&str> {
        responses.iter().map(|r| r.text.as_str()).collect()
    }

    #[test]
    fn cycle_script_repeats_in_order() {
        let backend = ScriptedGeneration::constant(Script::counts(&[("Yes", 2), ("No", 1)]));
        let out = backend
            .sample("q", &SamplingParams::default().with_n(5))
            .unwrap();
        assert_eq!(texts(&out), ["Yes", "Yes", "No", "Yes", "Yes"]);
    }

    #[test]
    fn weighted_script_depends_only_on_seed() {
        let script = Script::Weighted(vec![
            (ScriptedAnswer::new("a"), 0.5),
            (ScriptedAnswer::new("b"), 0.5),
        ]);
        let backend = ScriptedGeneration::constant(script);
        let p1 = SamplingParams::default().with_n(32).with_seed(7);
        assert_eq!(
            backend.sample("x", &p1).unwrap(),
            backend.sample("y", &p1).unwrap()
        );
        let p2 = p1.clone().with_seed(8);
        assert_ne!(
            backend.sample("x", &p1).unwrap(),
            backend.sample("x", &p2).unwrap()
        );
    }

    #[test]
    fn rules_match_in_order_and_gap_is_error() {
        let backend = ScriptedGeneration::new("m")
            .with_rule(
                PromptMatcher::Contains(vec!["given document".into()]),
                Script::repeat("Linda Davis", 1),
            )
            .for_prompt("exact", Script::repeat("Reba McEntire", 1));
        let p = SamplingParams::default().with_n(1);
        assert_eq!(
            backend.sample("exact", &p).unwrap()[0].text,
            "Reba McEntire"
        );
        assert_eq!(
            backend.sample("the given document", &p).unwrap()[0].text,
            "Linda Davis"
        );
        assert!(matches!(
            backend.sample("other", &p),
            Err(GatewayError::FixtureGap(_))
        ));
    }

    #[test]
    fn default_logprobs_one_per_word() {
        let r = ScriptedAnswer::new("Reba McEntire").to_response().unwrap();
        assert_eq!(r.token_logprobs, Some(vec![0.0, 0.0]));
        let r = ScriptedAnswer::without_logprobs("x").to_response().unwrap();
        assert!(r.token_logprobs.is_none());
    }

    #[test]
    fn fixture_file_round_trip() {
        let backend =
            ScriptedGeneration::new("m").for_prompt("p", Script::counts(&[("Yes", 7), ("No", 3)]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.json");
        std::fs::write(&path, serde_json::to_string(&backend).unwrap()).unwrap();
        assert_eq!(ScriptedGeneration::load(&path).unwrap(), backend);
    }
}
