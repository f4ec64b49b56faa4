use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::belief::Variant;
use crate::evaluate::ScoringConfig;
use crate::gateway::{BackendConfig, SamplingParams};
use crate::semantics::WeightMode;

/// Default no-context SePer at or above which a record counts as already
/// answered.
pub const DEFAULT_SKIP_KNOWN: f64 = 0.999;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// A full benchmark configuration, usually loaded from a TOML file.
///
/// ```toml
/// dataset = "data/dev.jsonl"
/// repetitions = 1
/// skip_known = 0.999
///
/// [sampling]
/// n = 10
/// temperature = 1.0
/// seed = 42
///
/// [scoring]
/// tau = 0.5
/// variants = ["hard", "soft"]
///
/// [generation]
/// kind = "http_generation"
/// endpoint = "http://localhost:8000/v1"
/// model_id = "meta-llama/Llama-2-7b-chat-hf"
///
/// [entailment]
/// kind = "http_entailment"
/// endpoint = "http://localhost:9000/entail"
/// model_id = "microsoft/deberta-large-mnli"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub generation: BackendConfig,
    pub entailment: BackendConfig,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub scoring: ScoringConfig,
    /// Exclude records whose no-context SePer reaches this value from the
    /// correlation statistics.
    #[serde(default)]
    pub skip_known: Option<f64>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Record wall-clock time per row. Off by default because timings make
    /// reports non-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn new(
        dataset: impl Into<PathBuf>,
        generation: BackendConfig,
        entailment: BackendConfig,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            generation,
            entailment,
            sampling: SamplingParams::default(),
            scoring: ScoringConfig::default(),
            skip_known: None,
            cache_dir: None,
            out: None,
            format: ReportFormat::Json,
            repetitions: 1,
            record_timing: false,
        }
    }

    /// Loads a TOML (or `.json`) config. Relative paths are resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
        };
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        for backend in [&mut self.generation, &mut self.entailment] {
            if let Some(f) = backend.fixture.as_mut() {
                fix(f);
            }
        }
        if let Some(c) = self.cache_dir.as_mut() {
            fix(c);
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config(
                "repetitions must be at least 1".into(),
            ));
        }
        if let Some(t) = self.skip_known {
            if !(0.0..=1.0).contains(&t) {
                return Err(HarnessError::Config(format!(
                    "skip_known threshold {t} outside [0, 1]"
                )));
            }
        }
        if self.scoring.variants.is_empty() {
            return Err(HarnessError::Config(
                "at least one variant is required".into(),
            ));
        }
        self.scoring
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.sampling
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.generation
            .validate()
            .and_then(|_| self.entailment.validate())
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Parallelism for record evaluation.
    pub fn parallelism(&self) -> usize {
        self.generation.parallelism_limit.max(1)
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub tau: Option<f64>,
    pub n_samples: Option<usize>,
    pub weight_mode: Option<WeightMode>,
    pub variants: Vec<Variant>,
    pub skip_known: Option<f64>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub cache_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(d) = &self.dataset {
            config.dataset = d.clone();
        }
        if let Some(t) = self.tau {
            config.scoring.tau = t;
        }
        if let Some(n) = self.n_samples {
            config.sampling.n = n;
        }
        if let Some(m) = self.weight_mode {
            config.scoring.weight_mode = m;
        }
        if !self.variants.is_empty() {
            let mut v = self.variants.clone();
            v.sort();
            v.dedup();
            config.scoring.variants = v;
        }
        if let Some(s) = self.skip_known {
            config.skip_known = Some(s);
        }
        if let Some(r) = self.repetitions {
            config.repetitions = r;
        }
        if let Some(s) = self.seed {
            config.sampling.seed = Some(s);
        }
        if let Some(o) = &self.out {
            config.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            config.format = f;
        }
        if let Some(c) = &self.cache_dir {
            config.cache_dir = Some(c.clone());
        }
        if let Some(p) = self.parallelism {
            config.generation.parallelism_limit = p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::BackendKind;

    const TOML: &str = r#"
dataset = "data.jsonl"
skip_known = 0.999

[sampling]
n = 4
seed = 7

[scoring]
tau = 0.6
variants = ["soft"]
weight_mode = "frequency"

[generation]
kind = "scripted_generation"
model_id = "scripted"
fixture = "script.json"

[entailment]
kind = "table_entailment"
model_id = "table"
fixture = "/abs/nli.json"
"#;

    #[test]
    fn loads_toml_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, TOML).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.dataset, dir.path().join("data.jsonl"));
        assert_eq!(cfg.generation.fixture, Some(dir.path().join("script.json")));
        assert_eq!(cfg.entailment.fixture, Some(PathBuf::from("/abs/nli.json")));
        assert_eq!(cfg.sampling.n, 4);
        assert_eq!(cfg.sampling.temperature, 1.0);
        assert_eq!(cfg.scoring.variants, vec![Variant::Soft]);
        assert_eq!(cfg.scoring.weight_mode, WeightMode::Frequency);
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.generation.retry_limit, 3);
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::new(
            "d.jsonl",
            BackendConfig::new(BackendKind::ScriptedGeneration, "g"),
            BackendConfig::new(BackendKind::TableEntailment, "e"),
        );
        Overrides {
            tau: Some(0.7),
            n_samples: Some(3),
            variants: vec![Variant::Soft, Variant::Hard, Variant::Soft],
            repetitions: Some(5),
            seed: Some(1),
            format: Some(ReportFormat::Csv),
            ..Default::default()
        }
        .apply(&mut cfg);
        assert_eq!(cfg.scoring.tau, 0.7);
        assert_eq!(cfg.sampling.n, 3);
        assert_eq!(cfg.scoring.variants, vec![Variant::Hard, Variant::Soft]);
        assert_eq!((cfg.repetitions, cfg.sampling.seed), (5, Some(1)));
        assert_eq!(cfg.format, ReportFormat::Csv);
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = RunConfig::new(
            "d.jsonl",
            BackendConfig::new(BackendKind::ScriptedGeneration, "g"),
            BackendConfig::new(BackendKind::TableEntailment, "e"),
        );
        cfg.validate().unwrap();
        cfg.repetitions = 0;
        assert!(cfg.validate().is_err());
        cfg.repetitions = 1;
        cfg.scoring.tau = 1.0;
        assert!(cfg.validate().is_err());
        cfg.scoring.tau = 0.5;
        cfg.generation.endpoint = Some("http://x".into());
        assert!(cfg.validate().is_err());
    }
}
