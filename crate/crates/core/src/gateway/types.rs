use serde::{Deserialize, Serialize};

use super::GatewayError;

/// Sampling hyperparameters for one generation request.
///
/// Defaults follow the reference setup: temperature 1.0, at most 512 new
/// tokens, ten samples per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
    /// Number of sampled responses (N).
    pub n: usize,
    pub seed: Option<u64>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            max_tokens: 512,
            n: 10,
            seed: None,
        }
    }
}

impl SamplingParams {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.n == 0 {
            return Err(GatewayError::InvalidParams("n must be at least 1".into()));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(GatewayError::InvalidParams(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidParams(
                "max_tokens must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

/// One generated answer together with its per-token log-probabilities.
///
/// `token_logprobs` is `None` when the backend did not report them. Only
/// frequency weighting is defined for such responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledResponse {
    pub text: String,
    pub token_logprobs: Option<Vec<f64>>,
    pub finish_reason: FinishReason,
}

impl SampledResponse {
    /// Builds a response and checks the log-probability invariants.
    pub fn new(
        text: impl Into<String>,
        token_logprobs: Option<Vec<f64>>,
        finish_reason: FinishReason,
    ) -> Result<Self, GatewayError> {
        let response = Self {
            text: text.into(),
            token_logprobs,
            finish_reason,
        };
        response.validate()?;
        Ok(response)
    }

    pub fn has_logprobs(&self) -> bool {
        self.token_logprobs.is_some()
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if let Some(lps) = &self.token_logprobs {
            if lps.is_empty() && self.finish_reason != FinishReason::Error {
                return Err(GatewayError::InvalidResponse(
                    "empty token log-probabilities on a completed response".into(),
                ));
            }
            if let Some(bad) = lps.iter().find(|lp| lp.is_nan() || **lp > 0.0) {
                return Err(GatewayError::InvalidResponse(format!(
                    "token log-probability {bad} is not <= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Three-way NLI output for an ordered (premise, hypothesis) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentJudgment {
    pub p_entail: f64,
    pub p_neutral: f64,
    pub p_contradict: f64,
}

impl EntailmentJudgment {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(p_entail: f64, p_neutral: f64, p_contradict: f64) -> Result<Self, GatewayError> {
        let judgment = Self {
            p_entail,
            p_neutral,
            p_contradict,
        };
        judgment.validate()?;
        Ok(judgment)
    }

    /// Certain entailment, used for normalized-equal strings.
    pub fn entailed() -> Self {
        Self {
            p_entail: 1.0,
            p_neutral: 0.0,
            p_contradict: 0.0,
        }
    }

    pub fn contradicted() -> Self {
        Self {
            p_entail: 0.0,
            p_neutral: 0.0,
            p_contradict: 1.0,
        }
    }

    /// Builds a judgment from raw scores that may not be exactly normalized.
    /// Scores within `1e-3` of summing to one are rescaled.
    pub fn from_scores(entail: f64, neutral: f64, contradict: f64) -> Result<Self, GatewayError> {
        let sum = entail + neutral + contradict;
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        if !(in_range(entail) && in_range(neutral) && in_range(contradict))
            || (sum - 1.0).abs() > 1e-3
        {
            return Err(GatewayError::InvalidResponse(format!(
                "entailment scores ({entail}, {neutral}, {contradict}) are not a distribution"
            )));
        }
        Self::new(entail / sum, neutral / sum, contradict / sum)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let parts = [self.p_entail, self.p_neutral, self.p_contradict];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(GatewayError::InvalidResponse(format!(
                "entailment probabilities {parts:?} outside [0, 1]"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(GatewayError::InvalidResponse(format!(
                "entailment probabilities sum to {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpGeneration,
    HttpEntailment,
    ScriptedGeneration,
    TableEntailment,
}

impl BackendKind {
    pub fn is_http(self) -> bool {
        matches!(
            self,
            BackendKind::HttpGeneration | BackendKind::HttpEntailment
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::HttpGeneration => "http_generation",
            BackendKind::HttpEntailment => "http_entailment",
            BackendKind::ScriptedGeneration => "scripted_generation",
            BackendKind::TableEntailment => "table_entailment",
        }
    }
}

/// Description of a generation or entailment backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_id: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_retry_limit")]
    pub retry_limit: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism_limit: usize,
    /// Script or table file for the mock kinds.
    #[serde(default)]
    pub fixture: Option<std::path::PathBuf>,
}

fn default_retry_limit() -> u32 {
    3
}

fn default_parallelism() -> usize {
    4
}

impl BackendConfig {
    pub fn new(kind: BackendKind, model_id: impl Into<String>) -> Self {
        Self {
            kind,
            endpoint: None,
            model_id: model_id.into(),
            auth_env: None,
            retry_limit: default_retry_limit(),
            parallelism_limit: default_parallelism(),
            fixture: None,
        }
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = Some(endpoint.into());
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        match (self.kind.is_http(), self.endpoint.is_some()) {
            (true, false) => Err(GatewayError::InvalidConfig(format!(
                "{} backend requires an endpoint",
                self.kind.as_str()
            ))),
            (false, true) => Err(GatewayError::InvalidConfig(format!(
                "{} backend must not set an endpoint",
                self.kind.as_str()
            ))),
            _ if self.parallelism_limit == 0 => Err(GatewayError::InvalidConfig(
                "parallelism_limit must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }
}
