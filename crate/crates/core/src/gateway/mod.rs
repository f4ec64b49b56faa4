//! Access to generation and entailment backends.
//!
//! [`Gateway`] wraps one generation backend and one entailment backend, adds
//! the persistent response cache, and applies the equality short-circuit to
//! entailment queries. Backends are either HTTP clients or deterministic
//! mocks ([`ScriptedGeneration`], [`TableEntailment`]).

mod cache;
mod http;
mod scripted;
mod table;
mod types;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

pub use cache::{cache_key, CacheEntry, ResponseCache, CACHE_SCHEMA_VERSION};
pub use http::{HttpEntailment, HttpGeneration};
pub use scripted::{PromptMatcher, Script, ScriptRule, ScriptedAnswer, ScriptedGeneration};
pub use table::{TableEntailment, TableEntry};
pub use types::{
    BackendConfig, BackendKind, EntailmentJudgment, FinishReason, SampledResponse, SamplingParams,
};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid sampling parameters: {0}")]
    InvalidParams(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("backend {endpoint} unreachable after {attempts} attempts: {last_error}")]
    Unreachable {
        endpoint: String,
        attempts: u32,
        last_error: String,
    },
    #[error("backend rejected request with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("invalid backend response: {0}")]
    InvalidResponse(String),
    #[error("fixture gap: {0}")]
    FixtureGap(String),
    #[error("cache error: {0}")]
    Cache(String),
}

pub trait GenerationBackend: Send + Sync {
    fn model_id(&self) -> &str;

    /// Returns `params.n` responses for `prompt`.
    fn sample(
        &self,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<SampledResponse>, GatewayError>;
}

pub trait EntailmentBackend: Send + Sync {
    fn model_id(&self) -> &str;

    /// Scores whether `premise` entails `hypothesis`.
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentJudgment, GatewayError>;
}

/// Lowercase, trim, collapse internal whitespace and strip trailing
/// punctuation.
pub fn normalize_text(text: &str) -> String {
    let collapsed = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// Cumulative gateway counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatewayStats {
    pub generation_calls: u64,
    pub generation_cache_hits: u64,
    pub entailment_queries: u64,
    pub entailment_short_circuits: u64,
    pub entailment_backend_calls: u64,
}

#[derive(Default)]
struct Counters {
    generation_calls: AtomicU64,
    generation_cache_hits: AtomicU64,
    entailment_queries: AtomicU64,
    entailment_short_circuits: AtomicU64,
    entailment_backend_calls: AtomicU64,
}

/// Result of one generation call, with whether it was served from cache.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub responses: Vec<SampledResponse>,
    pub cache_hit: bool,
}

pub struct Gateway {
    generator: Arc<dyn GenerationBackend>,
    generator_kind: BackendKind,
    generator_endpoint: Option<String>,
    entailer: Arc<dyn EntailmentBackend>,
    cache: Option<ResponseCache>,
    memo: RwLock<HashMap<(String, String), EntailmentJudgment>>,
    counters: Counters,
}

impl Gateway {
    /// Builds a gateway over two in-process backends.
    pub fn new(
        generator: Arc<dyn GenerationBackend>,
        entailer: Arc<dyn EntailmentBackend>,
    ) -> Self {
        Self {
            generator,
            generator_kind: BackendKind::ScriptedGeneration,
            generator_endpoint: None,
            entailer,
            cache: None,
            memo: RwLock::default(),
            counters: Counters::default(),
        }
    }

    /// Builds backends from their configurations. Mock kinds read their
    /// fixture file from `BackendConfig::fixture`.
    pub fn from_configs(
        generation: &BackendConfig,
        entailment: &BackendConfig,
        cache_dir: Option<PathBuf>,
    ) -> Result<Self, GatewayError> {
        generation.validate()?;
        entailment.validate()?;
        let fixture = |cfg: &BackendConfig| {
            cfg.fixture.clone().ok_or_else(|| {
                GatewayError::InvalidConfig(format!(
                    "{} backend requires a fixture path",
                    cfg.kind.as_str()
                ))
            })
        };
        let generator: Arc<dyn GenerationBackend> = match generation.kind {
            BackendKind::HttpGeneration => Arc::new(HttpGeneration::new(generation)?),
            BackendKind::ScriptedGeneration => {
                let mut scripted = ScriptedGeneration::load(&fixture(generation)?)?;
                scripted.model_id = generation.model_id.clone();
                Arc::new(scripted)
            }
            other => {
                return Err(GatewayError::InvalidConfig(format!(
                    "{} is not a generation backend",
                    other.as_str()
                )))
            }
        };
        let entailer: Arc<dyn EntailmentBackend> = match entailment.kind {
            BackendKind::HttpEntailment => Arc::new(HttpEntailment::new(entailment)?),
            BackendKind::TableEntailment => Arc::new(TableEntailment::load(&fixture(entailment)?)?),
            other => {
                return Err(GatewayError::InvalidConfig(format!(
                    "{} is not an entailment backend",
                    other.as_str()
                )))
            }
        };
        let mut gateway = Self::new(generator, entailer);
        gateway.generator_kind = generation.kind;
        gateway.generator_endpoint = generation.endpoint.clone();
        if let Some(dir) = cache_dir {
            gateway.cache = Some(ResponseCache::open(dir)?);
        }
        Ok(gateway)
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    pub fn generation_model(&self) -> &str {
        self.generator.model_id()
    }

    pub fn entailment_model(&self) -> &str {
        self.entailer.model_id()
    }

    fn generator_config(&self) -> BackendConfig {
        BackendConfig {
            endpoint: self.generator_endpoint.clone(),
            ..BackendConfig::new(self.generator_kind, self.generator.model_id())
        }
    }

    /// Samples `params.n` responses for `prompt`.
    pub fn sample_responses(
        &self,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<Vec<SampledResponse>, GatewayError> {
        self.sample_traced(prompt, params).map(|o| o.responses)
    }

    /// Like [`Gateway::sample_responses`], also reporting cache use.
    pub fn sample_traced(
        &self,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<SampleOutcome, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::InvalidInput("empty prompt".into()));
        }
        params.validate()?;
        self.counters
            .generation_calls
            .fetch_add(1, Ordering::Relaxed);

        let key = self
            .cache
            .as_ref()
            .map(|_| cache_key(&self.generator_config(), prompt, params));
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(entry) = cache.lookup(key)? {
                if entry.responses.len() == params.n {
                    self.counters
                        .generation_cache_hits
                        .fetch_add(1, Ordering::Relaxed);
                    return Ok(SampleOutcome {
                        responses: entry.responses,
                        cache_hit: true,
                    });
                }
            }
        }

        let responses = self.generator.sample(prompt, params)?;
        if responses.len() != params.n {
            return Err(GatewayError::InvalidResponse(format!(
                "expected {} responses, backend returned {}",
                params.n,
                responses.len()
            )));
        }
        for r in &responses {
            r.validate()?;
        }
        if let (Some(cache), Some(key)) = (&self.cache, key) {
            cache.store(&CacheEntry {
                schema_version: CACHE_SCHEMA_VERSION,
                key,
                model_id: self.generator.model_id().to_string(),
                prompt: prompt.to_string(),
                responses: responses.clone(),
            })?;
        }
        Ok(SampleOutcome {
            responses,
            cache_hit: false,
        })
    }

    /// Entailment probabilities for `premise ⊢ hypothesis`.
    ///
    /// Normalized-equal strings return certain entailment without touching
    /// the backend. Backend answers are memoized for the gateway lifetime.
    pub fn judge_entailment(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<EntailmentJudgment, GatewayError> {
        self.counters
            .entailment_queries
            .fetch_add(1, Ordering::Relaxed);
        let (p, h) = (normalize_text(premise), normalize_text(hypothesis));
        if p.is_empty() || h.is_empty() {
            return Err(GatewayError::InvalidInput(
                "entailment inputs must be non-empty".into(),
            ));
        }
        if p == h {
            self.counters
                .entailment_short_circuits
                .fetch_add(1, Ordering::Relaxed);
            return Ok(EntailmentJudgment::entailed());
        }
        let key = (premise.to_string(), hypothesis.to_string());
        if let Some(j) = self
            .memo
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
        {
            return Ok(*j);
        }
        self.counters
            .entailment_backend_calls
            .fetch_add(1, Ordering::Relaxed);
        let judgment = self.entailer.entail(premise, hypothesis)?;
        judgment.validate()?;
        self.memo
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, judgment);
        Ok(judgment)
    }

    pub fn stats(&self) -> GatewayStats {
        let c = &self.counters;
        GatewayStats {
            generation_calls: c.generation_calls.load(Ordering::Relaxed),
            generation_cache_hits: c.generation_cache_hits.load(Ordering::Relaxed),
            entailment_queries: c.entailment_queries.load(Ordering::Relaxed),
            entailment_short_circuits: c.entailment_short_circuits.load(Ordering::Relaxed),
            entailment_backend_calls: c.entailment_backend_calls.load(Ordering::Relaxed),
        }
    }
}
