//! Fixtures and brute-force oracles shared by the property and acceptance
//! suites.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use seper::gateway::{
    EntailmentJudgment, FinishReason, Gateway, SampledResponse, Script, ScriptedGeneration,
    TableEntailment,
};
use seper::semantics::{WeightMode, WeightVector};

pub fn judgment(p: f64) -> EntailmentJudgment {
    EntailmentJudgment::new(p, 1.0 - p, 0.0).unwrap()
}

pub fn table_gateway(table: TableEntailment) -> Gateway {
    Gateway::new(
        Arc::new(ScriptedGeneration::constant(Script::repeat("unused", 1))),
        Arc::new(table),
    )
}

pub fn responses<S: AsRef<str>>(texts: &[S]) -> Vec<SampledResponse> {
    texts
        .iter()
        .map(|t| SampledResponse::new(t.as_ref(), None, FinishReason::Stop).unwrap())
        .collect()
}

/// Relabels so that labels appear in first-occurrence order.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Connected components of the "equivalent" graph, by union-find.
pub fn closure_labels(n: usize, equivalent: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        parent[i] = root;
        root
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && equivalent(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    canonical(&roots)
}

/// Directed entailment probabilities over named texts.
#[derive(Debug, Clone, Default)]
pub struct Pairs(pub HashMap<(String, String), f64>);

impl Pairs {
    pub fn set(&mut self, a: &str, b: &str, p: f64) {
        self.0.insert((a.to_string(), b.to_string()), p);
    }

    pub fn get(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        self.0[&(a.to_string(), b.to_string())]
    }

    pub fn equivalent(&self, a: &str, b: &str, tau: f64) -> bool {
        self.get(a, b).min(self.get(b, a)) >= tau
    }

    pub fn table(&self) -> TableEntailment {
        let mut t = TableEntailment::new();
        for ((a, b), p) in &self.0 {
            t.insert(a, b, judgment(*p));
        }
        t
    }
}

/// Entailment value on a 0.05 grid, either side of `tau`.
fn above(rng: &mut impl Rng, tau: f64) -> f64 {
    let lo = (tau * 20.0).ceil() as u32;
    rng.random_range(lo..=20) as f64 / 20.0
}

fn below(rng: &mut impl Rng, tau: f64) -> f64 {
    let hi = (tau * 20.0).ceil() as u32;
    rng.random_range(0..hi) as f64 / 20.0
}

/// A random table over `n` texts whose equivalence relation at `tau` is
/// transitive: texts with the same hidden label are equivalent, others are
/// not (at least one direction falls below `tau`).
pub fn transitive_pairs(rng: &mut impl Rng, names: &[String], tau: f64) -> (Pairs, Vec<usize>) {
    let groups = rng.random_range(1..=names.len());
    let labels: Vec<usize> = names.iter().map(|_| rng.random_range(0..groups)).collect();
    let mut pairs = Pairs::default();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let (forward, backward) = if labels[i] == labels[j] {
                (above(rng, tau), above(rng, tau))
            } else {
                match rng.random_range(0..3) {
                    0 => (below(rng, tau), above(rng, tau)),
                    1 => (above(rng, tau), below(rng, tau)),
                    _ => (below(rng, tau), below(rng, tau)),
                }
            };
            pairs.set(&names[i], &names[j], forward);
            pairs.set(&names[j], &names[i], backward);
        }
    }
    (pairs, canonical(&labels))
}

pub fn random_weights(rng: &mut impl Rng, n: usize) -> WeightVector {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    WeightVector::from_weights(
        raw.iter().map(|w| w / total).collect(),
        WeightMode::RawLoglik,
    )
    .unwrap()
}

/// A random scoring problem: responses with a transitive equivalence
/// structure, reference answers, arbitrary response/answer entailments.
pub struct Instance {
    pub texts: Vec<String>,
    pub answers: Vec<String>,
    pub weights: WeightVector,
    pub pairs: Pairs,
    pub labels: Vec<usize>,
}

pub fn random_instance(rng: &mut impl Rng, tau: f64) -> Instance {
    let n = rng.random_range(1..=6);
    let k = rng.random_range(1..=3);
    let texts: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
    let answers: Vec<String> = (0..k).map(|i| format!("a{i}")).collect();
    let (mut pairs, labels) = transitive_pairs(rng, &texts, tau);
    for r in &texts {
        for a in &answers {
            pairs.set(r, a, rng.random_range(0..=20) as f64 / 20.0);
            pairs.set(a, r, rng.random_range(0..=20) as f64 / 20.0);
        }
    }
    let weights = random_weights(rng, n);
    Instance {
        texts,
        answers,
        weights,
        pairs,
        labels,
    }
}

impl Instance {
    /// Double loop over answers and responses: a response counts when the
    /// first member of its group is equivalent to the answer.
    pub fn oracle_hard(&self, tau: f64) -> f64 {
        let mut total = 0.0;
        for a in &self.answers {
            let mut belief = 0.0;
            for i in 0..self.texts.len() {
                let rep = self
                    .labels
                    .iter()
                    .position(|l| *l == self.labels[i])
                    .unwrap();
                if self.pairs.equivalent(&self.texts[rep], a, tau) {
                    belief += self.weights.weights()[i];
                }
            }
            total += belief;
        }
        total / self.answers.len() as f64
    }

    pub fn oracle_soft(&self) -> f64 {
        let mut total = 0.0;
        for a in &self.answers {
            for (i, r) in self.texts.iter().enumerate() {
                total += self.weights.weights()[i] * self.pairs.get(r, a);
            }
        }
        total / self.answers.len() as f64
    }
}
