//! End-to-end evaluation of one record: build the prompt, sample, weight,
//! cluster, score, and compare the no-context and with-context conditions.

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_scores, BaselineScores};
use crate::belief::{
    delta_seper, weights_with_fallback, Aggregation, BeliefEstimate, ScoreError, Scorer,
    SoftKernel, UtilityResult, Variant,
};
use crate::gateway::{Gateway, SampledResponse, SamplingParams};
use crate::harness::{build_prompt, EvalRecord};
use crate::semantics::{
    check_tau, cluster_responses, ClusterSet, Framing, PairMode, WeightMode, WeightVector,
    DEFAULT_TAU,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    NoContext,
    WithContext,
}

/// Scoring knobs shared by every record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub tau: f64,
    pub weight_mode: WeightMode,
    pub pair_mode: PairMode,
    pub aggregation: Aggregation,
    pub soft_kernel: SoftKernel,
    pub variants: Vec<Variant>,
    pub baselines: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            weight_mode: WeightMode::LengthNormalized,
            pair_mode: PairMode::QuestionPrefixed,
            aggregation: Aggregation::Mean,
            soft_kernel: SoftKernel::PerResponse,
            variants: vec![Variant::Hard, Variant::Soft],
            baselines: true,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        check_tau(self.tau)?;
        Ok(())
    }

    pub fn wants(&self, variant: Variant) -> bool {
        self.variants.contains(&variant)
    }

    fn needs_clusters(&self) -> bool {
        self.wants(Variant::Hard) || self.baselines || self.soft_kernel == SoftKernel::PerCluster
    }
}

/// Everything computed for one record under one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEvaluation {
    pub condition: Condition,
    pub prompt: String,
    pub responses: Vec<SampledResponse>,
    pub weights: WeightVector,
    pub degraded: bool,
    pub cluster_set: Option<ClusterSet>,
    pub hard: Option<BeliefEstimate>,
    pub soft: Option<BeliefEstimate>,
    pub baselines: Option<BaselineScores>,
    pub cache_hit: bool,
}

impl ConditionEvaluation {
    pub fn estimate(&self, variant: Variant) -> Option<&BeliefEstimate> {
        match variant {
            Variant::Hard => self.hard.as_ref(),
            Variant::Soft => self.soft.as_ref(),
        }
    }
}

struct Sampled {
    prompt: String,
    responses: Vec<SampledResponse>,
    cache_hit: bool,
}

fn sample(
    gateway: &Gateway,
    record: &EvalRecord,
    condition: Condition,
    sampling: &SamplingParams,
) -> Result<Sampled, ScoreError> {
    let prompt = build_prompt(record, condition == Condition::WithContext)?;
    let outcome = gateway.sample_traced(&prompt, sampling)?;
    Ok(Sampled {
        prompt,
        responses: outcome.responses,
        cache_hit: outcome.cache_hit,
    })
}

fn score(
    gateway: &Gateway,
    record: &EvalRecord,
    condition: Condition,
    sampled: Sampled,
    weight_mode: WeightMode,
    scoring: &ScoringConfig,
) -> Result<ConditionEvaluation, ScoreError> {
    let (weights, degraded) = weights_with_fallback(&sampled.responses, weight_mode)?;
    let framing = Framing::new(&record.question, scoring.pair_mode);
    let cluster_set = if scoring.needs_clusters() {
        Some(cluster_responses(
            gateway,
            &sampled.responses,
            scoring.tau,
            &framing,
        )?)
    } else {
        None
    };
    let scorer = Scorer::new(gateway, scoring.tau, framing)
        .aggregation(scoring.aggregation)
        .soft_kernel(scoring.soft_kernel);

    let mark = |mut e: BeliefEstimate| {
        e.degraded = degraded;
        e
    };
    let hard = match (&cluster_set, scoring.wants(Variant::Hard)) {
        (Some(set), true) => Some(mark(scorer.seper_hard(
            &sampled.responses,
            set,
            &weights,
            &record.answers,
        )?)),
        _ => None,
    };
    let soft = if scoring.wants(Variant::Soft) {
        Some(mark(scorer.seper_soft(
            &sampled.responses,
            &weights,
            &record.answers,
            cluster_set.as_ref(),
        )?))
    } else {
        None
    };
    let baselines = match (&cluster_set, scoring.baselines) {
        (Some(set), true) => Some(baseline_scores(
            &sampled.responses,
            &weights,
            set,
            &record.answers,
        )?),
        _ => None,
    };
    Ok(ConditionEvaluation {
        condition,
        prompt: sampled.prompt,
        responses: sampled.responses,
        weights,
        degraded,
        cluster_set,
        hard,
        soft,
        baselines,
        cache_hit: sampled.cache_hit,
    })
}

/// Evaluates one condition of a record.
pub fn evaluate_condition(
    gateway: &Gateway,
    record: &EvalRecord,
    condition: Condition,
    sampling: &SamplingParams,
    scoring: &ScoringConfig,
) -> Result<ConditionEvaluation, ScoreError> {
    scoring.validate()?;
    let sampled = sample(gateway, record, condition, sampling)?;
    score(
        gateway,
        record,
        condition,
        sampled,
        scoring.weight_mode,
        scoring,
    )
}

/// Belief estimate for one condition and kernel variant.
pub fn evaluate_query(
    gateway: &Gateway,
    record: &EvalRecord,
    condition: Condition,
    variant: Variant,
    sampling: &SamplingParams,
    scoring: &ScoringConfig,
) -> Result<BeliefEstimate, ScoreError> {
    let scoring = ScoringConfig {
        variants: vec![variant],
        baselines: false,
        ..scoring.clone()
    };
    let eval = evaluate_condition(gateway, record, condition, sampling, &scoring)?;
    Ok(eval
        .estimate(variant)
        .cloned()
        .expect("requested variant is always computed"))
}

/// Both conditions of a record plus the per-variant utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    pub no_context: ConditionEvaluation,
    pub with_context: ConditionEvaluation,
    pub hard: Option<UtilityResult>,
    pub soft: Option<UtilityResult>,
}

impl PairEvaluation {
    pub fn utility(&self, variant: Variant) -> Option<&UtilityResult> {
        match variant {
            Variant::Hard => self.hard.as_ref(),
            Variant::Soft => self.soft.as_ref(),
        }
    }

    pub fn degraded(&self) -> bool {
        self.no_context.degraded || self.with_context.degraded
    }
}

/// Samples both conditions, then scores them with a common weight mode: if
/// either side lacks log-probabilities both fall back to frequency weights,
/// so the two estimates stay comparable.
pub fn evaluate_pair(
    gateway: &Gateway,
    record: &EvalRecord,
    sampling: &SamplingParams,
    scoring: &ScoringConfig,
) -> Result<PairEvaluation, ScoreError> {
    scoring.validate()?;
    let before = sample(gateway, record, Condition::NoContext, sampling)?;
    let after = sample(gateway, record, Condition::WithContext, sampling)?;
    let missing = before
        .responses
        .iter()
        .chain(&after.responses)
        .any(|r| !r.has_logprobs());
    let mode = if missing {
        WeightMode::Frequency
    } else {
        scoring.weight_mode
    };
    let mut no_context = score(gateway, record, Condition::NoContext, before, mode, scoring)?;
    let mut with_context = score(
        gateway,
        record,
        Condition::WithContext,
        after,
        mode,
        scoring,
    )?;
    if missing && scoring.weight_mode != WeightMode::Frequency {
        for eval in [&mut no_context, &mut with_context] {
            eval.degraded = true;
            for e in [eval.hard.as_mut(), eval.soft.as_mut()]
                .into_iter()
                .flatten()
            {
                e.degraded = true;
            }
        }
    }
    let utility = |variant| -> Result<Option<UtilityResult>, ScoreError> {
        match (no_context.estimate(variant), with_context.estimate(variant)) {
            (Some(b), Some(a)) => Ok(Some(delta_seper(b.clone(), a.clone())?)),
            _ => Ok(None),
        }
    };
    let hard = utility(Variant::Hard)?;
    let soft = utility(Variant::Soft)?;
    Ok(PairEvaluation {
        no_context,
        with_context,
        hard,
        soft,
    })
}
