//! Question-answering briefs: question generation, evidence search through
//! the proxy, and typed answers.

pub mod backend;
pub mod baseline;
pub mod pipeline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use backend::{Answerer, BackendError, QuestionGenerator, WireBackend};
pub use baseline::{baseline_answer, baseline_generate_questions};
pub use pipeline::{Evidence, EvidenceError, PipelineConfig, QaBriefer};

/// Most questions a generated brief may carry.
pub const MAX_QUESTIONS: usize = 5;
/// Fewest questions a generated brief may carry.
pub const MIN_QUESTIONS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub claim_id: String,
    pub qid: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Extractive,
    Abstractive,
    NoAnswer,
}

impl AnswerType {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::Extractive => "extractive",
            AnswerType::Abstractive => "abstractive",
            AnswerType::NoAnswer => "no_answer",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnswerType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extractive" => Ok(AnswerType::Extractive),
            "abstractive" => Ok(AnswerType::Abstractive),
            "no_answer" => Ok(AnswerType::NoAnswer),
            other => Err(format!("unknown answer type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    #[serde(rename = "type")]
    pub answer_type: AnswerType,
    pub text: String,
    /// Empty only for a no-answer when no evidence was retrieved.
    #[serde(rename = "url")]
    pub evidence_url: String,
}

impl Answer {
    pub fn new(answer_type: AnswerType, text: impl Into<String>, evidence_url: impl Into<String>) -> Self {
        Answer { answer_type, text: text.into(), evidence_url: evidence_url.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: Question,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaBrief {
    pub claim_id: String,
    pub pairs: Vec<QaPair>,
    /// `gold`, `baseline`, or the question-generation backend's name.
    pub generator_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QgMode {
    ClaimOnly,
    ClaimSource,
    #[default]
    Iterative,
}

impl FromStr for QgMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "claim_only" => Ok(QgMode::ClaimOnly),
            "claim_source" => Ok(QgMode::ClaimSource),
            "iterative" => Ok(QgMode::Iterative),
            other => Err(format!("unknown mode `{other}` (expected claim_only, claim_source, iterative)")),
        }
    }
}

impl fmt::Display for QgMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QgMode::ClaimOnly => "claim_only",
            QgMode::ClaimSource => "claim_source",
            QgMode::Iterative => "iterative",
        })
    }
}
