use std::time::Instant;

use rayon::prelude::*;

use super::report::{
    summarize, BaselinePair, Report, ReportRow, ReportSettings, RunFailure, VariantDelta,
    REPORT_SCHEMA_VERSION,
};
use super::{load_dataset, EvalRecord, HarnessError, RunConfig};
use crate::belief::{UtilityResult, Variant};
use crate::evaluate::{evaluate_pair, ScoringConfig};
use crate::gateway::{Gateway, SamplingParams};

/// Settings for evaluating a list of records with an existing gateway.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub sampling: SamplingParams,
    pub scoring: ScoringConfig,
    pub repetitions: usize,
    pub skip_known: Option<f64>,
    pub parallelism: usize,
    pub record_timing: bool,
}

impl RunOptions {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            sampling: config.sampling.clone(),
            scoring: config.scoring.clone(),
            repetitions: config.repetitions,
            skip_known: config.skip_known,
            parallelism: config.parallelism(),
            record_timing: config.record_timing,
        }
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::default(),
            scoring: ScoringConfig::default(),
            repetitions: 1,
            skip_known: None,
            parallelism: 1,
            record_timing: false,
        }
    }
}

/// Sampling parameters for one repetition: the seed is offset by the
/// repetition index so repetitions draw independent samples.
fn repetition_params(base: &SamplingParams, repetition: usize) -> SamplingParams {
    SamplingParams {
        seed: base.seed.map(|s| s.wrapping_add(repetition as u64)),
        ..base.clone()
    }
}

fn to_delta(u: &UtilityResult) -> VariantDelta {
    VariantDelta {
        before: u.before.seper,
        after: u.after.seper,
        delta: u.delta,
    }
}

fn evaluate_row(
    gateway: &Gateway,
    record: &EvalRecord,
    repetition: usize,
    options: &RunOptions,
) -> Result<ReportRow, RunFailure> {
    let started = Instant::now();
    let params = repetition_params(&options.sampling, repetition);
    let pair =
        evaluate_pair(gateway, record, &params, &options.scoring).map_err(|e| RunFailure {
            record_id: record.id.clone(),
            repetition,
            error: e.to_string(),
        })?;
    let baselines = match (&pair.no_context.baselines, &pair.with_context.baselines) {
        (Some(b), Some(a)) => Some(BaselinePair {
            no_context: b.clone(),
            with_context: a.clone(),
        }),
        _ => None,
    };
    Ok(ReportRow {
        record_id: record.id.clone(),
        repetition,
        gold_utility: record.gold_utility,
        skipped_known: false,
        degraded: pair.degraded(),
        hard: pair.utility(Variant::Hard).map(to_delta),
        soft: pair.utility(Variant::Soft).map(to_delta),
        baselines,
        generation_cache_hits: u32::from(pair.no_context.cache_hit)
            + u32::from(pair.with_context.cache_hit),
        elapsed_ms: options
            .record_timing
            .then(|| started.elapsed().as_secs_f64() * 1e3),
    })
}

/// Evaluates every record × repetition and assembles the report.
///
/// Records run concurrently on a pool of `options.parallelism` threads.
/// Rows are ordered by (record id, repetition), so the report does not
/// depend on scheduling. A failing record is logged in `failures` and the
/// run continues.
pub fn run_records(
    gateway: &Gateway,
    records: &[EvalRecord],
    options: &RunOptions,
) -> Result<Report, HarnessError> {
    if options.repetitions == 0 {
        return Err(HarnessError::Config(
            "repetitions must be at least 1".into(),
        ));
    }
    let jobs: Vec<(&EvalRecord, usize)> = records
        .iter()
        .flat_map(|r| (0..options.repetitions).map(move |rep| (r, rep)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let results: Vec<Result<ReportRow, RunFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|(record, rep)| evaluate_row(gateway, record, *rep, options))
            .collect()
    });

    let (mut rows, mut failures): (Vec<_>, Vec<_>) = (Vec::new(), Vec::new());
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(|a, b| (&a.record_id, a.repetition).cmp(&(&b.record_id, b.repetition)));
    failures.sort_by(|a, b| (&a.record_id, a.repetition).cmp(&(&b.record_id, b.repetition)));

    let summary = summarize(&mut rows, failures.len(), options.skip_known);
    let scoring = &options.scoring;
    let settings = ReportSettings {
        generation_model: gateway.generation_model().to_string(),
        entailment_model: gateway.entailment_model().to_string(),
        n_samples: options.sampling.n,
        temperature: options.sampling.temperature,
        max_tokens: options.sampling.max_tokens,
        seed: options.sampling.seed,
        tau: scoring.tau,
        weight_mode: scoring.weight_mode.as_str().to_string(),
        pair_mode: label(&scoring.pair_mode),
        aggregation: label(&scoring.aggregation),
        soft_kernel: label(&scoring.soft_kernel),
        variants: scoring
            .variants
            .iter()
            .map(|v| v.as_str().to_string())
            .collect(),
        baselines: scoring.baselines,
        repetitions: options.repetitions,
        skip_known: options.skip_known,
    };
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION,
        settings,
        rows,
        failures,
        summary,
    })
}

fn label<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Builds the backends named in `config`, loads the dataset and runs it.
pub fn run_benchmark(config: &RunConfig) -> Result<Report, HarnessError> {
    config.validate()?;
    let gateway = Gateway::from_configs(
        &config.generation,
        &config.entailment,
        config.cache_dir.clone(),
    )?;
    let records = load_dataset(&config.dataset)?;
    run_records(&gateway, &records, &RunOptions::from_config(config))
}
