use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_text, EntailmentBackend, EntailmentJudgment, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub premise: String,
    pub hypothesis: String,
    pub entail: f64,
    pub neutral: f64,
    pub contradict: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct TableFile {
    #[serde(default)]
    model_id: Option<String>,
    entries: Vec<TableEntry>,
    #[serde(default)]
    otherwise: Option<EntailmentJudgment>,
}

/// Entailment mock backed by a lookup table of directed pairs.
///
/// Keys are normalized with the same rule as the equality short-circuit.
/// A missing pair is a [`GatewayError::FixtureGap`] unless an explicit
/// `otherwise` judgment was configured.
#[derive(Debug, Clone, Default)]
pub struct TableEntailment {
    model_id: String,
    table: HashMap<(String, String), EntailmentJudgment>,
    otherwise: Option<EntailmentJudgment>,
}

impl TableEntailment {
    pub fn new() -> Self {
        Self {
            model_id: "table".into(),
            ..Default::default()
        }
    }

    pub fn insert(&mut self, premise: &str, hypothesis: &str, judgment: EntailmentJudgment) {
        self.table.insert(
            (normalize_text(premise), normalize_text(hypothesis)),
            judgment,
        );
    }

    pub fn with(mut self, premise: &str, hypothesis: &str, judgment: EntailmentJudgment) -> Self {
        self.insert(premise, hypothesis, judgment);
        self
    }

    /// Inserts the same judgment in both directions.
    pub fn with_symmetric(self, a: &str, b: &str, judgment: EntailmentJudgment) -> Self {
        self.with(a, b, judgment).with(b, a, judgment)
    }

    /// Judgment returned for pairs absent from the table.
    pub fn otherwise(mut self, judgment: EntailmentJudgment) -> Self {
        self.otherwise = Some(judgment);
        self
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let file: TableFile = serde_json::from_str(&text)
            .map_err(|e| GatewayError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut table = Self::new();
        if let Some(id) = file.model_id {
            table.model_id = id;
        }
        for e in &file.entries {
            let judgment = EntailmentJudgment::new(e.entail, e.neutral, e.contradict)?;
            table.insert(&e.premise, &e.hypothesis, judgment);
        }
        if let Some(j) = file.otherwise {
            j.validate()?;
            table.otherwise = Some(j);
        }
        Ok(table)
    }
}

impl EntailmentBackend for TableEntailment {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentJudgment, GatewayError> {
        let key = (normalize_text(premise), normalize_text(hypothesis));
        self.table
            .get(&key)
            .copied()
            .or(self.otherwise)
            .ok_or_else(|| {
                GatewayError::FixtureGap(format!(
                    "no entailment entry for ({premise:?}, {hypothesis:?})"
                ))
            })
    }
}
