//! Sequence likelihoods, sample weights, semantic equivalence and greedy
//! semantic clustering.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayError, SampledResponse};

/// Default bidirectional entailment threshold.
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum SemanticsError {
    #[error("response has no tokens")]
    EmptyTokens,
    #[error("response {index} has no token log-probabilities")]
    MissingLogprobs { index: usize },
    #[error("at least one response is required")]
    NoResponses,
    #[error("tau must lie in (0, 1), got {0}")]
    InvalidTau(f64),
    #[error("response index {index} out of range for {len} weights")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

pub fn check_tau(tau: f64) -> Result<(), SemanticsError> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(SemanticsError::InvalidTau(tau))
    }
}

/// Sum of token log-probabilities, i.e. the log of the sequence likelihood.
pub fn sequence_log_likelihood(response: &SampledResponse) -> Result<f64, SemanticsError> {
    let tokens = response
        .token_logprobs
        .as_ref()
        .ok_or(SemanticsError::MissingLogprobs { index: 0 })?;
    if tokens.is_empty() {
        return Err(SemanticsError::EmptyTokens);
    }
    Ok(tokens.iter().sum())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `exp(loglik / tokens)`, renormalized over the samples.
    #[default]
    LengthNormalized,
    /// `exp(loglik)`, renormalized over the samples.
    RawLoglik,
    /// `1 / N` per sample.
    Frequency,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::LengthNormalized => "length_normalized",
            WeightMode::RawLoglik => "raw_loglik",
            WeightMode::Frequency => "frequency",
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length_normalized" => Ok(WeightMode::LengthNormalized),
            "raw_loglik" => Ok(WeightMode::RawLoglik),
            "frequency" => Ok(WeightMode::Frequency),
            other => Err(format!("unknown weight mode {other:?}")),
        }
    }
}

/// Probability masses over the sampled responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    mode: WeightMode,
}

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    /// Wraps explicit weights, checking they form a distribution.
    pub fn from_weights(weights: Vec<f64>, mode: WeightMode) -> Result<Self, SemanticsError> {
        if weights.is_empty() {
            return Err(SemanticsError::NoResponses);
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(SemanticsError::InvalidWeights(format!(
                "weight {w} outside [0, 1]"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(SemanticsError::InvalidWeights(format!(
                "weights sum to {sum}"
            )));
        }
        Ok(Self { weights, mode })
    }

    pub fn uniform(n: usize) -> Result<Self, SemanticsError> {
        if n == 0 {
            return Err(SemanticsError::NoResponses);
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
            mode: WeightMode::Frequency,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Turns sampled likelihoods into a distribution over the N samples.
pub fn normalize_weights(
    responses: &[SampledResponse],
    mode: WeightMode,
) -> Result<WeightVector, SemanticsError> {
    if responses.is_empty() {
        return Err(SemanticsError::NoResponses);
    }
    if mode == WeightMode::Frequency {
        return WeightVector::uniform(responses.len());
    }
    let scores = responses
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let tokens = r
                .token_logprobs
                .as_ref()
                .ok_or(SemanticsError::MissingLogprobs { index })?;
            let ll = sequence_log_likelihood(r)?;
            Ok(match mode {
                WeightMode::LengthNormalized => ll / tokens.len() as f64,
                _ => ll,
            })
        })
        .collect::<Result<Vec<f64>, SemanticsError>>()?;

    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // Every sample has zero likelihood; no information to weight by.
        return Ok(WeightVector {
            weights: vec![1.0 / responses.len() as f64; responses.len()],
            mode,
        });
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(WeightVector {
        weights: exps.into_iter().map(|e| e / total).collect(),
        mode,
    })
}

/// How answer strings are presented to the entailment model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// `Q: {question} A: {answer}`
    #[default]
    QuestionPrefixed,
    BareAnswer,
}

/// Formats answers for entailment according to a [`PairMode`].
#[derive(Debug, Clone)]
pub struct Framing<'a> {
    pub question: &'a str,
    pub mode: PairMode,
}

impl<'a> Framing<'a> {
    pub fn new(question: &'a str, mode: PairMode) -> Self {
        Self { question, mode }
    }

    pub fn bare() -> Framing<'static> {
        Framing {
            question: "",
            mode: PairMode::BareAnswer,
        }
    }

    pub fn frame<'t>(&self, answer: &'t str) -> Cow<'t, str> {
        match self.mode {
            PairMode::BareAnswer => Cow::Borrowed(answer),
            PairMode::QuestionPrefixed => {
                Cow::Owned(format!("Q: {} A: {}", self.question.trim(), answer.trim()))
            }
        }
    }
}

/// Bidirectional entailment: both directions must reach `tau`.
pub fn semantically_equivalent(
    gateway: &Gateway,
    x: &str,
    y: &str,
    tau: f64,
) -> Result<bool, SemanticsError> {
    check_tau(tau)?;
    let forward = gateway.judge_entailment(x, y)?.p_entail;
    if forward < tau {
        return Ok(false);
    }
    let backward = gateway.judge_entailment(y, x)?.p_entail;
    Ok(forward.min(backward) >= tau)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticCluster {
    pub member_indices: Vec<usize>,
    pub representative_index: usize,
}

impl SemanticCluster {
    fn founded_by(index: usize) -> Self {
        Self {
            member_indices: vec![index],
            representative_index: index,
        }
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

/// A partition of response indices into semantic clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<SemanticCluster>,
    pub tau: f64,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Total number of members across clusters.
    pub fn response_count(&self) -> usize {
        self.clusters.iter().map(SemanticCluster::len).sum()
    }

    /// Cluster label for each response index.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![usize::MAX; self.response_count()];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &i in &cluster.member_indices {
                if let Some(slot) = labels.get_mut(i) {
                    *slot = c;
                }
            }
        }
        labels
    }

    /// True when the clusters partition `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for cluster in &self.clusters {
            if cluster.is_empty()
                || !cluster
                    .member_indices
                    .contains(&cluster.representative_index)
            {
                return false;
            }
            for &i in &cluster.member_indices {
                match seen.get_mut(i) {
                    Some(s) if !*s => *s = true,
                    _ => return false,
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Greedy clustering in sampling order: each text joins the first existing
/// cluster whose representative it is equivalent to, else founds a new one.
pub fn cluster_texts<S: AsRef<str>>(
    gateway: &Gateway,
    texts: &[S],
    tau: f64,
) -> Result<ClusterSet, SemanticsError> {
    check_tau(tau)?;
    if texts.is_empty() {
        return Err(SemanticsError::NoResponses);
    }
    let mut clusters: Vec<SemanticCluster> = Vec::new();
    for (i, text) in texts.iter().enumerate() {
        let mut joined = false;
        for cluster in clusters.iter_mut() {
            let rep = texts[cluster.representative_index].as_ref();
            if semantically_equivalent(gateway, rep, text.as_ref(), tau)? {
                cluster.member_indices.push(i);
                joined = true;
                break;
            }
        }
        if !joined {
            clusters.push(SemanticCluster::founded_by(i));
        }
    }
    Ok(ClusterSet { clusters, tau })
}

/// Clusters sampled responses, comparing their framed texts.
pub fn cluster_responses(
    gateway: &Gateway,
    responses: &[SampledResponse],
    tau: f64,
    framing: &Framing<'_>,
) -> Result<ClusterSet, SemanticsError> {
    let texts: Vec<Cow<'_, str>> = responses.iter().map(|r| framing.frame(&r.text)).collect();
    cluster_texts(gateway, &texts, tau)
}

/// Total weight of a cluster's members.
pub fn cluster_probability(
    cluster: &SemanticCluster,
    weights: &WeightVector,
) -> Result<f64, SemanticsError> {
    cluster
        .member_indices
        .iter()
        .map(|&index| {
            weights
                .weights
                .get(index)
                .copied()
                .ok_or(SemanticsError::IndexOutOfRange {
                    index,
                    len: weights.len(),
                })
        })
        .sum::<Result<f64, _>>()
        .map(|p| p.clamp(0.0, 1.0))
}
