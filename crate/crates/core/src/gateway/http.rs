//! HTTP backends.
//!
//! Generation speaks the OpenAI-compatible chat-completions shape with
//! `logprobs: true`. Entailment is a plain JSON POST of
//! `{premise, hypothesis}` answered by `{entail, neutral, contradict}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    BackendConfig, BackendKind, EntailmentBackend, EntailmentJudgment, FinishReason, GatewayError,
    GenerationBackend, SampledResponse, SamplingParams,
};

const DEFAULT_BACKOFF: Duration = Duration::from_millis(250);
const REQUEST_TIMEOUT: Duration = Duration::from_secs(300);

enum Failure {
    Retryable(String),
    Fatal(GatewayError),
}

struct HttpClient {
    agent: ureq::Agent,
    endpoint: String,
    bearer: Option<String>,
    retry_limit: u32,
    backoff: Duration,
}

impl HttpClient {
    fn new(config: &BackendConfig, expected: BackendKind) -> Result<Self, GatewayError> {
        config.validate()?;
        if config.kind != expected {
            return Err(GatewayError::InvalidConfig(format!(
                "expected a {} backend, got {}",
                expected.as_str(),
                config.kind.as_str()
            )));
        }
        let bearer = match &config.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::InvalidConfig(format!("auth variable {var} is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(REQUEST_TIMEOUT))
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint: config.endpoint.clone().unwrap_or_default(),
            bearer,
            retry_limit: config.retry_limit,
            backoff: DEFAULT_BACKOFF,
        })
    }

    fn post_once<B: Serialize>(&self, url: &str, body: &B) -> Result<Value, Failure> {
        let mut request = self.agent.post(url);
        if let Some(token) = &self.bearer {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if status >= 400 {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(Failure::Fatal(GatewayError::Rejected {
                status,
                body: text,
            }));
        }
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| Failure::Fatal(GatewayError::InvalidResponse(e.to_string())))
    }

    /// Posts with exponential backoff; `retry_limit` counts retries after
    /// the first attempt.
    fn post<B: Serialize>(&self, url: &str, body: &B) -> Result<Value, GatewayError> {
        let mut last = String::new();
        for attempt in 0..=self.retry_limit {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.post_once(url, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => last = msg,
            }
        }
        Err(GatewayError::Unreachable {
            endpoint: url.to_string(),
            attempts: self.retry_limit + 1,
            last_error: last,
        })
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
    n: usize,
    logprobs: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
    #[serde(default)]
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    #[serde(default)]
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Deserialize)]
struct TokenLogprob {
    logprob: f64,
}

fn parse_choice(choice: Choice) -> Result<SampledResponse, GatewayError> {
    let finish_reason = match choice.finish_reason.as_deref() {
        Some("length") => FinishReason::Length,
        Some("stop") | Some("eos") | None => FinishReason::Stop,
        Some(_) => FinishReason::Error,
    };
    let token_logprobs = choice
        .logprobs
        .and_then(|lp| lp.content)
        .filter(|tokens| !tokens.is_empty())
        // Some servers report tiny positive values from fp rounding.
        .map(|tokens| tokens.iter().map(|t| t.logprob.min(0.0)).collect());
    SampledResponse::new(
        choice
            .message
            .content
            .unwrap_or_default()
            .trim()
            .to_string(),
        token_logprobs,
        finish_reason,
    )
}

/// OpenAI-compatible chat-completions generation backend.
///
/// `endpoint` is the API base (e.g. `http://localhost:8000/v1`); the
/// `/chat/completions` suffix is appended unless already present. Servers
/// that return fewer than `n` choices are queried again until `n` responses
/// are collected, with the seed advanced per follow-up request.
pub struct HttpGeneration {
    client: HttpClient,
    model_id: String,
    url: String,
}

impl HttpGeneration {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        let client = HttpClient::new(config, BackendKind::HttpGeneration)?;
        let base = client.endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(Self {
            client,
            model_id: config.model_id.clone(),
            url,
        })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.client.backoff = backoff;
        self
    }
}

impl GenerationBackend for HttpGeneration {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn sample(
        &self,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<SampledResponse>, GatewayError> {
        let mut out = Vec::with_capacity(params.n);
        let mut round = 0u64;
        while out.len() < params.n {
            let request = ChatRequest {
                model: &self.model_id,
                messages: vec![ChatMessage {
                    role: "user",
                    content: prompt,
                }],
                temperature: params.temperature,
                max_tokens: params.max_tokens,
                n: params.n - out.len(),
                logprobs: true,
                seed: params.seed.map(|s| s.wrapping_add(round)),
            };
            let value = self.client.post(&self.url, &request)?;
            let parsed: ChatResponse = serde_json::from_value(value)
                .map_err(|e| GatewayError::InvalidResponse(e.to_string()))?;
            if parsed.choices.is_empty() {
                return Err(GatewayError::InvalidResponse(
                    "chat completion returned no choices".into(),
                ));
            }
            for choice in parsed.choices {
                if out.len() == params.n {
                    break;
                }
                out.push(parse_choice(choice)?);
            }
            round += 1;
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct EntailRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct EntailResponse {
    entail: f64,
    neutral: f64,
    contradict: f64,
}

/// JSON entailment backend: `POST endpoint {premise, hypothesis}`.
pub struct HttpEntailment {
    client: HttpClient,
    model_id: String,
}

impl HttpEntailment {
    pub fn new(config: &BackendConfig) -> Result<Self, GatewayError> {
        Ok(Self {
            client: HttpClient::new(config, BackendKind::HttpEntailment)?,
            model_id: config.model_id.clone(),
        })
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.client.backoff = backoff;
        self
    }
}

impl EntailmentBackend for HttpEntailment {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentJudgment, GatewayError> {
        let value = self.client.post(
            &self.client.endpoint,
            &EntailRequest {
                premise,
                hypothesis,
            },
        )?;
        let r: EntailResponse = serde_json::from_value(value)
            .map_err(|e| GatewayError::InvalidResponse(e.to_string()))?;
        EntailmentJudgment::from_scores(r.entail, r.neutral, r.contradict)
    }
}
