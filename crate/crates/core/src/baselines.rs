//! Comparison metrics computed on the same sampled responses: lexical
//! matching (exact match, ROUGE-L F1) and uncertainty measures (predictive
//! entropy, semantic entropy, perplexity).

use serde::{Deserialize, Serialize};

use crate::belief::semantic_entropy;
use crate::gateway::SampledResponse;
use crate::semantics::{sequence_log_likelihood, ClusterSet, SemanticsError, WeightVector};

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("at least one reference answer is required")]
    NoAnswers,
    #[error("at least one response is required")]
    NoResponses,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub exact_match: f64,
    /// ROUGE-L F1.
    pub rouge_l: f64,
    pub predictive_entropy: f64,
    pub semantic_entropy: f64,
    /// `None` when the backend reported no log-probabilities.
    pub mean_perplexity: Option<f64>,
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

fn strip_punctuation(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect::<String>()
        .to_lowercase()
}

/// SQuAD-style answer normalization: lowercase, drop punctuation and
/// articles, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    strip_punctuation(text)
        .split_whitespace()
        .filter(|w| !ARTICLES.contains(w))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn exact_match(prediction: &str, answers: &[String]) -> Result<f64, BaselineError> {
    if answers.is_empty() {
        return Err(BaselineError::NoAnswers);
    }
    let pred = normalize_answer(prediction);
    Ok(if answers.iter().any(|a| normalize_answer(a) == pred) {
        1.0
    } else {
        0.0
    })
}

fn rouge_tokens(text: &str) -> Vec<String> {
    strip_punctuation(text)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L F1 with `P = LCS/|prediction|` and `R = LCS/|answer|`.
pub fn rouge_l_f1(prediction: &str, answer: &str) -> f64 {
    let p = rouge_tokens(prediction);
    let a = rouge_tokens(answer);
    match (p.is_empty(), a.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let lcs = lcs_len(&p, &a) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / p.len() as f64;
    let recall = lcs / a.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Entropy (nats) of the per-response weights, without clustering.
pub fn predictive_entropy(weights: &WeightVector) -> f64 {
    weights
        .weights()
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| -w * w.ln())
        .sum::<f64>()
        .max(0.0)
}

/// Mean over responses of `exp(-loglik / tokens)`.
pub fn mean_perplexity(responses: &[SampledResponse]) -> Result<f64, BaselineError> {
    if responses.is_empty() {
        return Err(BaselineError::NoResponses);
    }
    let mut total = 0.0;
    for (index, r) in responses.iter().enumerate() {
        let tokens = r
            .token_logprobs
            .as_ref()
            .ok_or(SemanticsError::MissingLogprobs { index })?;
        let ll = sequence_log_likelihood(r)?;
        total += (-ll / tokens.len() as f64).exp();
    }
    Ok(total / responses.len() as f64)
}

/// All baselines for one condition. Lexical scores are averaged over the
/// sampled responses; each response is matched against its best reference.
pub fn baseline_scores(
    responses: &[SampledResponse],
    weights: &WeightVector,
    cluster_set: &ClusterSet,
    answers: &[String],
) -> Result<BaselineScores, BaselineError> {
    if answers.is_empty() {
        return Err(BaselineError::NoAnswers);
    }
    if responses.is_empty() {
        return Err(BaselineError::NoResponses);
    }
    let n = responses.len() as f64;
    let mut em = 0.0;
    let mut rouge = 0.0;
    for r in responses {
        em += exact_match(&r.text, answers)?;
        rouge += answers
            .iter()
            .map(|a| rouge_l_f1(&r.text, a))
            .fold(0.0, f64::max);
    }
    let perplexity = if responses.iter().all(SampledResponse::has_logprobs) {
        Some(mean_perplexity(responses)?)
    } else {
        None
    };
    Ok(BaselineScores {
        exact_match: em / n,
        rouge_l: rouge / n,
        predictive_entropy: predictive_entropy(weights),
        semantic_entropy: semantic_entropy(cluster_set, weights)?,
        mean_perplexity: perplexity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::FinishReason;
    use crate::semantics::WeightMode;

    fn answers(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_match_cases() {
        assert_eq!(
            exact_match("Linda Davis", &answers(&["Linda Davis"])).unwrap(),
            1.0
        );
        assert_eq!(
            exact_match("linda davis.", &answers(&["Linda Davis"])).unwrap(),
            1.0
        );
        assert_eq!(
            exact_match("The  Beatles", &answers(&["beatles"])).unwrap(),
            1.0
        );
        assert_eq!(
            exact_match("Reba McEntire", &answers(&["Linda Davis"])).unwrap(),
            0.0
        );
        assert!(exact_match("x", &[]).is_err());
    }

    /// Brute force: longest common subsequence by enumerating every
    /// subsequence of the shorter sequence.
    fn lcs_oracle(a: &[String], b: &[String]) -> usize {
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let sub: Vec<&String> = (0..short.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &short[i])
                .collect();
            let mut it = long.iter();
            if sub.iter().all(|t| it.any(|x| x == *t)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    #[test]
    fn rouge_cases() {
        assert_eq!(rouge_l_f1("the cat sat", "the cat sat"), 1.0);
        assert_eq!(rouge_l_f1("dog", "cat"), 0.0);
        assert_eq!(rouge_l_f1("", ""), 1.0);
        assert_eq!(rouge_l_f1("", "cat"), 0.0);
        let p = rouge_tokens("the cat sat");
        let a = rouge_tokens("the cat");
        assert_eq!(lcs_oracle(&p, &a), 2);
        assert!((rouge_l_f1("the cat sat", "the cat") - 0.8).abs() < 1e-12);
    }

    #[test]
    fn lcs_matches_brute_force() {
        let words = ["a", "b", "c"];
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as usize
        };
        for _ in 0..300 {
            let x: Vec<String> = (0..next() % 7)
                .map(|_| words[next() % 3].to_string())
                .collect();
            let y: Vec<String> = (0..next() % 7)
                .map(|_| words[next() % 3].to_string())
                .collect();
            assert_eq!(lcs_len(&x, &y), lcs_oracle(&x, &y), "{x:?} {y:?}");
        }
    }

    #[test]
    fn rouge_swaps_precision_and_recall() {
        assert_eq!(
            rouge_l_f1("who sings with reba", "linda davis sings"),
            rouge_l_f1("linda davis sings", "who sings with reba")
        );
    }

    #[test]
    fn predictive_entropy_cases() {
        assert_eq!(predictive_entropy(&WeightVector::uniform(1).unwrap()), 0.0);
        let ten = predictive_entropy(&WeightVector::uniform(10).unwrap());
        assert!((ten - 10f64.ln()).abs() < 1e-12);
        let w = WeightVector::from_weights(vec![0.2, 0.6, 0.2], WeightMode::RawLoglik).unwrap();
        // 30-digit reference: 0.950270539233234559...
        assert!((predictive_entropy(&w) - 0.950_270_539_233_234_6).abs() < 1e-12);
    }

    fn resp(lps: Vec<f64>) -> SampledResponse {
        SampledResponse::new("x", Some(lps), FinishReason::Stop).unwrap()
    }

    #[test]
    fn perplexity_cases() {
        let ln2 = 2f64.ln();
        assert!((mean_perplexity(&[resp(vec![-ln2, -ln2, -ln2])]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(mean_perplexity(&[resp(vec![0.0, 0.0])]).unwrap(), 1.0);
        let v = mean_perplexity(&[resp(vec![-1.0, -1.0]), resp(vec![-2.0])]).unwrap();
        let e = std::f64::consts::E;
        assert!((v - (e + e * e) / 2.0).abs() < 1e-12);
        assert!((v - 5.053_668_963_694_848).abs() < 1e-12);
        let missing = SampledResponse::new("x", None, FinishReason::Stop).unwrap();
        assert!(mean_perplexity(&[missing]).is_err());
    }
}
