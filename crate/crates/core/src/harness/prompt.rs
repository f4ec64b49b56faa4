use super::EvalRecord;

pub const NAIVE_INSTRUCTION: &str = "Answer the question based on your own knowledge. Only give me the answer and do not output any other words.";
pub const RAG_INSTRUCTION: &str = "Answer the question based on the given document. Only give me the answer and do not output any other words.";
pub const RAG_DOCUMENTS_HEADER: &str = "The following are given documents.";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("record {record_id} has no contexts for the with-context condition")]
pub struct PromptError {
    pub record_id: String,
}

/// Renders the generation prompt for a record.
///
/// Without context:
///
/// ```text
/// {NAIVE_INSTRUCTION}
///
/// Question: {question}
/// ```
///
/// With context, the documents are joined by blank lines in dataset order and
/// substituted directly after the documents header:
///
/// ```text
/// {RAG_INSTRUCTION}
///
/// The following are given documents.{documents}
///
/// Question: {question}
/// ```
pub fn build_prompt(record: &EvalRecord, with_context: bool) -> Result<String, PromptError> {
    if !with_context {
        return Ok(format!(
            "{NAIVE_INSTRUCTION}\n\nQuestion: {}",
            record.question
        ));
    }
    if record.contexts.is_empty() {
        return Err(PromptError {
            record_id: record.id.clone(),
        });
    }
    let reference = record.contexts.join("\n\n");
    Ok(format!(
        "{RAG_INSTRUCTION}\n\n{RAG_DOCUMENTS_HEADER}{reference}\n\nQuestion: {}",
        record.question
    ))
}
