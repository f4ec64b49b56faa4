//! Belief in reference answers (SePer) and its shift under retrieval
//! (ΔSePer).
//!
//! Two kernels are supported. The hard kernel sums the mass of clusters whose
//! representative is bidirectionally equivalent to a reference answer. The
//! soft kernel weights each sampled response by the entailment probability
//! `E(response, answer)`. Multiple reference answers are averaged.

use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, SampledResponse};
use crate::semantics::{
    check_tau, cluster_probability, semantically_equivalent, ClusterSet, Framing, SemanticsError,
    WeightMode, WeightVector,
};

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("at least one reference answer is required")]
    NoAnswers,
    #[error("{what} mismatch: before is {before}, after is {after}")]
    Mismatch {
        what: &'static str,
        before: String,
        after: String,
    },
    #[error("{responses} responses but {weights} weights")]
    LengthMismatch { responses: usize, weights: usize },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Prompt(#[from] crate::harness::PromptError),
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Hard,
    Soft,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Hard => "hard",
            Variant::Soft => "soft",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hard" => Ok(Variant::Hard),
            "soft" => Ok(Variant::Soft),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

/// How per-answer beliefs combine when several references are given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    /// Belief in the best-supported reference.
    Max,
}

/// Soft-kernel granularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftKernel {
    /// `Σ_i w_i · E(r_i, a)`
    #[default]
    PerResponse,
    /// `Σ_C p(C) · E(rep(C), a)`
    PerCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerBelief {
    pub answer: String,
    pub belief: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEstimate {
    pub seper: f64,
    pub variant: Variant,
    pub aggregation: Aggregation,
    pub per_answer: Vec<AnswerBelief>,
    /// Present for the hard kernel and the per-cluster soft kernel.
    pub cluster_set: Option<ClusterSet>,
    pub weights: WeightVector,
    /// Likelihood weighting was requested but log-probabilities were
    /// missing, so frequency weights were used.
    #[serde(default)]
    pub degraded: bool,
}

impl BeliefEstimate {
    fn assemble(
        variant: Variant,
        aggregation: Aggregation,
        per_answer: Vec<AnswerBelief>,
        cluster_set: Option<ClusterSet>,
        weights: &WeightVector,
    ) -> Self {
        let values = per_answer.iter().map(|a| a.belief);
        let seper = match aggregation {
            Aggregation::Mean => values.sum::<f64>() / per_answer.len() as f64,
            Aggregation::Max => values.fold(0.0, f64::max),
        };
        Self {
            seper: seper.clamp(0.0, 1.0),
            variant,
            aggregation,
            per_answer,
            cluster_set,
            weights: weights.clone(),
            degraded: false,
        }
    }
}

/// Retrieval utility: belief after retrieval minus belief before.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityResult {
    pub delta: f64,
    pub before: BeliefEstimate,
    pub after: BeliefEstimate,
}

/// Scores sampled responses against reference answers through a gateway.
pub struct Scorer<'a> {
    pub gateway: &'a Gateway,
    pub tau: f64,
    pub framing: Framing<'a>,
    pub aggregation: Aggregation,
    pub soft_kernel: SoftKernel,
}

impl<'a> Scorer<'a> {
    pub fn new(gateway: &'a Gateway, tau: f64, framing: Framing<'a>) -> Self {
        Self {
            gateway,
            tau,
            framing,
            aggregation: Aggregation::Mean,
            soft_kernel: SoftKernel::PerResponse,
        }
    }

    pub fn aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn soft_kernel(mut self, kernel: SoftKernel) -> Self {
        self.soft_kernel = kernel;
        self
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> Result<f64, ScoreError> {
        let p = self.framing.frame(premise);
        let h = self.framing.frame(hypothesis);
        Ok(self.gateway.judge_entailment(&p, &h)?.p_entail)
    }

    fn equivalent(&self, x: &str, y: &str) -> Result<bool, ScoreError> {
        let x = self.framing.frame(x);
        let y = self.framing.frame(y);
        Ok(semantically_equivalent(self.gateway, &x, &y, self.tau)?)
    }

    fn check_inputs(
        &self,
        responses: &[SampledResponse],
        weights: &WeightVector,
        answers: &[String],
    ) -> Result<(), ScoreError> {
        check_tau(self.tau)?;
        if answers.is_empty() {
            return Err(ScoreError::NoAnswers);
        }
        if responses.len() != weights.len() {
            return Err(ScoreError::LengthMismatch {
                responses: responses.len(),
                weights: weights.len(),
            });
        }
        Ok(())
    }

    /// Hard-kernel belief: mass of clusters whose representative is
    /// equivalent to each answer.
    pub fn seper_hard(
        &self,
        responses: &[SampledResponse],
        cluster_set: &ClusterSet,
        weights: &WeightVector,
        answers: &[String],
    ) -> Result<BeliefEstimate, ScoreError> {
        self.check_inputs(responses, weights, answers)?;
        if cluster_set.response_count() != responses.len() {
            return Err(ScoreError::LengthMismatch {
                responses: responses.len(),
                weights: cluster_set.response_count(),
            });
        }
        let masses = cluster_set
            .clusters
            .iter()
            .map(|c| cluster_probability(c, weights))
            .collect::<Result<Vec<_>, _>>()?;
        let mut per_answer = Vec::with_capacity(answers.len());
        for answer in answers {
            let mut belief = 0.0;
            for (cluster, mass) in cluster_set.clusters.iter().zip(&masses) {
                let rep = &responses[cluster.representative_index].text;
                if self.equivalent(rep, answer)? {
                    belief += mass;
                }
            }
            per_answer.push(AnswerBelief {
                answer: answer.clone(),
                belief: renormalized(belief, masses.iter().sum()),
            });
        }
        Ok(BeliefEstimate::assemble(
            Variant::Hard,
            self.aggregation,
            per_answer,
            Some(cluster_set.clone()),
            weights,
        ))
    }

    /// Soft-kernel belief. With [`SoftKernel::PerCluster`] a cluster set is
    /// required.
    pub fn seper_soft(
        &self,
        responses: &[SampledResponse],
        weights: &WeightVector,
        answers: &[String],
        cluster_set: Option<&ClusterSet>,
    ) -> Result<BeliefEstimate, ScoreError> {
        self.check_inputs(responses, weights, answers)?;
        let mut per_answer = Vec::with_capacity(answers.len());
        for answer in answers {
            let belief = match (self.soft_kernel, cluster_set) {
                (SoftKernel::PerCluster, Some(set)) => {
                    let (mut total, mut mass) = (0.0, 0.0);
                    for cluster in &set.clusters {
                        let rep = &responses[cluster.representative_index].text;
                        let p = cluster_probability(cluster, weights)?;
                        total += p * self.entail(rep, answer)?;
                        mass += p;
                    }
                    renormalized(total, mass)
                }
                (SoftKernel::PerCluster, None) => {
                    return Err(ScoreError::Semantics(SemanticsError::InvalidWeights(
                        "per-cluster soft kernel needs a cluster set".into(),
                    )))
                }
                (SoftKernel::PerResponse, _) => {
                    let mut total = 0.0;
                    for (r, w) in responses.iter().zip(weights.weights()) {
                        total += w * self.entail(&r.text, answer)?;
                    }
                    renormalized(total, weights.weights().iter().sum())
                }
            };
            per_answer.push(AnswerBelief {
                answer: answer.clone(),
                belief,
            });
        }
        let clusters = match self.soft_kernel {
            SoftKernel::PerCluster => cluster_set.cloned(),
            SoftKernel::PerResponse => None,
        };
        Ok(BeliefEstimate::assemble(
            Variant::Soft,
            self.aggregation,
            per_answer,
            clusters,
            weights,
        ))
    }
}

/// Divides by the float sum of the weights actually used, so a belief that
/// covers every sample is exactly 1 rather than 1 minus rounding error.
fn renormalized(mass: f64, total: f64) -> f64 {
    if total > 0.0 {
        (mass / total).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Shannon entropy (nats) of the cluster-level distribution.
pub fn semantic_entropy(
    cluster_set: &ClusterSet,
    weights: &WeightVector,
) -> Result<f64, SemanticsError> {
    let mut entropy = 0.0;
    for cluster in &cluster_set.clusters {
        let p = cluster_probability(cluster, weights)?;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
    }
    Ok(entropy.max(0.0))
}

/// ΔSePer. Negative values mean the context lowered the model's belief.
pub fn delta_seper(
    before: BeliefEstimate,
    after: BeliefEstimate,
) -> Result<UtilityResult, ScoreError> {
    if before.variant != after.variant {
        return Err(ScoreError::Mismatch {
            what: "variant",
            before: before.variant.as_str().into(),
            after: after.variant.as_str().into(),
        });
    }
    if before.weights.mode() != after.weights.mode() {
        return Err(ScoreError::Mismatch {
            what: "weight mode",
            before: before.weights.mode().as_str().into(),
            after: after.weights.mode().as_str().into(),
        });
    }
    if before.aggregation != after.aggregation {
        return Err(ScoreError::Mismatch {
            what: "aggregation",
            before: format!("{:?}", before.aggregation),
            after: format!("{:?}", after.aggregation),
        });
    }
    Ok(UtilityResult {
        delta: after.seper - before.seper,
        before,
        after,
    })
}

/// Weights for `responses`, falling back to frequency weights when a
/// likelihood mode is requested but log-probabilities are missing. The flag
/// reports whether the fallback happened.
pub fn weights_with_fallback(
    responses: &[SampledResponse],
    mode: WeightMode,
) -> Result<(WeightVector, bool), SemanticsError> {
    let degraded = mode != WeightMode::Frequency && responses.iter().any(|r| !r.has_logprobs());
    let effective = if degraded {
        WeightMode::Frequency
    } else {
        mode
    };
    Ok((
        crate::semantics::normalize_weights(responses, effective)?,
        degraded,
    ))
}
