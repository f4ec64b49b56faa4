use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;

/// One benchmark item.
///
/// Unknown JSON fields are kept in `extra` so they survive a round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default)]
    pub contexts: Vec<String>,
    /// Human-derived utility of the contexts, in [0, 1].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_utility: Option<f64>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl EvalRecord {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        answers: Vec<String>,
        contexts: Vec<String>,
    ) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            answers,
            contexts,
            gold_utility: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_gold_utility(mut self, gold: f64) -> Self {
        self.gold_utility = Some(gold);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id must be non-empty".into());
        }
        if self.question.trim().is_empty() {
            return Err("question must be non-empty".into());
        }
        if self.answers.is_empty() {
            return Err("answers must be non-empty".into());
        }
        if self.answers.iter().any(|a| a.trim().is_empty()) {
            return Err("answers must not contain empty strings".into());
        }
        if let Some(g) = self.gold_utility {
            if !(0.0..=1.0).contains(&g) {
                return Err(format!("gold_utility {g} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

const REQUIRED_FIELDS: [&str; 3] = ["id", "question", "answers"];

/// Parses JSONL text into validated records. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<EvalRecord>, HarnessError> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| HarnessError::MalformedJson {
            line: line_no,
            message: e.to_string(),
        })?;
        let Value::Object(map) = &value else {
            return Err(HarnessError::InvalidRecord {
                line: line_no,
                message: "expected a JSON object".into(),
            });
        };
        if let Some(field) = REQUIRED_FIELDS.iter().find(|f| !map.contains_key(**f)) {
            return Err(HarnessError::MissingField {
                line: line_no,
                field: field.to_string(),
            });
        }
        let record: EvalRecord =
            serde_json::from_value(value).map_err(|e| HarnessError::InvalidRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        record
            .validate()
            .map_err(|message| HarnessError::InvalidRecord {
                line: line_no,
                message,
            })?;
        if let Some(first) = seen.insert(record.id.clone(), line_no) {
            return Err(HarnessError::DuplicateId {
                id: record.id,
                line: line_no,
                first_line: first,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_dataset(path: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text)
}
