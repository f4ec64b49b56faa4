//! Benchmark harness: JSONL datasets, prompt templates, run orchestration
//! and report emission.

mod config;
mod dataset;
mod prompt;
pub mod report;
mod run;

use std::path::PathBuf;

pub use config::{Overrides, ReportFormat, RunConfig, DEFAULT_SKIP_KNOWN};
pub use dataset::{load_dataset, parse_dataset, EvalRecord};
pub use prompt::{
    build_prompt, PromptError, NAIVE_INSTRUCTION, RAG_DOCUMENTS_HEADER, RAG_INSTRUCTION,
};
pub use report::{emit_report, load_report, render_report, summarize, Report, ReportRow};
pub use run::{run_benchmark, run_records, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?} (first seen on line {first_line})")]
    DuplicateId {
        id: String,
        line: usize,
        first_line: usize,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Score(#[from] crate::belief::ScoreError),
}
