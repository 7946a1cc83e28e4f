//! Annotation workflow: question writing, validation, clarity, answering,
//! answer validation, no-answer verification, completion.
//!
//! Every transition returns a new record; the input is never mutated.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::validate::{validate_answer, Rule};
use super::{validate_questions, validate_record, AnswerRecord, AnswerStatus, ClaimRecord, QuestionRecord};
use crate::qabrief::{Answer, AnswerType};
use crate::search::Blocklist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkflowState {
    QuestionsWritten,
    QuestionsValidated,
    QuestionsClarified,
    Answered,
    AnswersValidated,
    NoAnswerVerified,
    Complete,
}

impl fmt::Display for WorkflowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSubmission {
    pub qid: usize,
    pub search_queries: Vec<String>,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorkflowEvent {
    /// Automated question checks passed.
    QuestionsPassed,
    /// Questions sent back for re-annotation.
    QuestionsRejected,
    /// Clarity pass; may add questions.
    QuestionsClarified {
        added: Vec<String>,
    },
    AnswersSubmitted {
        answers: Vec<AnswerSubmission>,
    },
    /// An answer looks incorrect.
    Flag {
        qid: usize,
        answer_index: usize,
    },
    /// Replacement for a flagged answer.
    Reannotate {
        qid: usize,
        answer_index: usize,
        answer: Answer,
    },
    AnswersAccepted,
    /// A second group confirmed the no-answer records.
    NoAnswerConfirmed,
    /// A second group found an answer where a no-answer was recorded.
    AnswerFound {
        qid: usize,
        search_queries: Vec<String>,
        answer: Answer,
    },
    Complete,
}

impl WorkflowEvent {
    pub fn name(&self) -> &'static str {
        match self {
            WorkflowEvent::QuestionsPassed => "questions_passed",
            WorkflowEvent::QuestionsRejected => "questions_rejected",
            WorkflowEvent::QuestionsClarified { .. } => "questions_clarified",
            WorkflowEvent::AnswersSubmitted { .. } => "answers_submitted",
            WorkflowEvent::Flag { .. } => "flag",
            WorkflowEvent::Reannotate { .. } => "reannotate",
            WorkflowEvent::AnswersAccepted => "answers_accepted",
            WorkflowEvent::NoAnswerConfirmed => "no_answer_confirmed",
            WorkflowEvent::AnswerFound { .. } => "answer_found",
            WorkflowEvent::Complete => "complete",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkflowError {
    #[error("event `{event}` is not legal in state `{state}`")]
    IllegalTransition { state: WorkflowState, event: &'static str },
    #[error("event `{event}` rejected: {reason}")]
    Rejected { event: &'static str, reason: String },
}

#[derive(Debug, Clone, Default)]
pub struct Workflow {
    pub blocklist: Blocklist,
}

pub fn advance_workflow(record: &ClaimRecord, event: &WorkflowEvent) -> Result<ClaimRecord, WorkflowError> {
    Workflow::default().advance(record, event)
}

fn rules_text(rules: &[Rule]) -> String {
    rules.iter().map(|r| r.name()).collect::<Vec<_>>().join(", ")
}

impl Workflow {
    pub fn advance(&self, record: &ClaimRecord, event: &WorkflowEvent) -> Result<ClaimRecord, WorkflowError> {
        use WorkflowEvent as E;
        use WorkflowState as S;

        let name = event.name();
        let illegal = || WorkflowError::IllegalTransition { state: record.state, event: name };
        let reject = |reason: String| WorkflowError::Rejected { event: name, reason };
        let mut next = record.clone();

        match (record.state, event) {
            (S::QuestionsWritten, E::QuestionsPassed) => {
                let report = validate_questions(record);
                if !report.is_clean() {
                    return Err(reject(rules_text(&report.error_rules())));
                }
                next.state = S::QuestionsValidated;
            }
            (S::QuestionsValidated, E::QuestionsRejected) => next.state = S::QuestionsWritten,
            (S::QuestionsValidated, E::QuestionsClarified { added }) => {
                let last = record.questions.iter().map(|q| q.qid).max().unwrap_or(0);
                for (qid, text) in (last + 1..).zip(added) {
                    next.questions.push(QuestionRecord {
                        qid,
                        text: text.clone(),
                        search_queries: vec![],
                        answers: vec![],
                    });
                }
                let report = validate_questions(&next);
                if !report.is_clean() {
                    return Err(reject(rules_text(&report.error_rules())));
                }
                next.state = S::QuestionsClarified;
            }
            (S::QuestionsClarified, E::AnswersSubmitted { answers }) => {
                for sub in answers {
                    self.check_answer(sub.qid, &sub.answer).map_err(reject)?;
                    let q = question_mut(&mut next, sub.qid)
                        .ok_or_else(|| reject(format!("unknown question {}", sub.qid)))?;
                    q.search_queries.extend(sub.search_queries.iter().cloned());
                    q.answers.push(AnswerRecord::new(sub.answer.clone()));
                }
                if let Some(q) = next.questions.iter().find(|q| q.answers.is_empty()) {
                    return Err(reject(format!("question {} has no answer", q.qid)));
                }
                next.state = S::Answered;
            }
            (S::Answered | S::AnswersValidated, E::Flag { qid, answer_index }) => {
                let a = answer_mut(&mut next, *qid, *answer_index)
                    .ok_or_else(|| reject(format!("no answer {answer_index} on question {qid}")))?;
                if a.status == AnswerStatus::Flagged {
                    return Err(reject(format!("answer {answer_index} on question {qid} is already flagged")));
                }
                a.status = AnswerStatus::Flagged;
                next.state = S::Answered;
            }
            (S::Answered, E::Reannotate { qid, answer_index, answer }) => {
                self.check_answer(*qid, answer).map_err(reject)?;
                let a = answer_mut(&mut next, *qid, *answer_index)
                    .ok_or_else(|| reject(format!("no answer {answer_index} on question {qid}")))?;
                if a.status != AnswerStatus::Flagged {
                    return Err(reject(format!("answer {answer_index} on question {qid} is not flagged")));
                }
                *a = AnswerRecord::new(answer.clone());
            }
            (S::Answered, E::AnswersAccepted) => {
                let flagged = next.questions.iter().flat_map(|q| &q.answers).any(|a| a.status == AnswerStatus::Flagged);
                if flagged {
                    return Err(reject("flagged answers await re-annotation".into()));
                }
                for a in next.questions.iter_mut().flat_map(|q| q.answers.iter_mut()) {
                    a.status = AnswerStatus::Accepted;
                }
                next.state = S::AnswersValidated;
            }
            (S::AnswersValidated, E::NoAnswerConfirmed) => {
                if !record.has_no_answer() {
                    return Err(reject("record has no no-answer records".into()));
                }
                next.state = S::NoAnswerVerified;
            }
            (S::NoAnswerVerified, E::AnswerFound { qid, search_queries, answer }) => {
                if answer.answer_type == AnswerType::NoAnswer {
                    return Err(reject("found answer must be extractive or abstractive".into()));
                }
                self.check_answer(*qid, answer).map_err(reject)?;
                let q = question_mut(&mut next, *qid).ok_or_else(|| reject(format!("unknown question {qid}")))?;
                let before = q.answers.len();
                q.answers.retain(|a| a.answer.answer_type != AnswerType::NoAnswer);
                if q.answers.len() == before {
                    return Err(reject(format!("question {qid} has no no-answer record")));
                }
                q.search_queries.extend(search_queries.iter().cloned());
                q.answers.push(AnswerRecord { answer: answer.clone(), status: AnswerStatus::Accepted });
            }
            (S::AnswersValidated, E::Complete) if record.has_no_answer() => {
                return Err(reject("no-answer records must be verified first".into()));
            }
            (S::AnswersValidated | S::NoAnswerVerified, E::Complete) => {
                let report = validate_record(record, &self.blocklist, &|_| None);
                if !report.is_clean() {
                    return Err(reject(rules_text(&report.error_rules())));
                }
                next.state = S::Complete;
            }
            _ => return Err(illegal()),
        }
        Ok(next)
    }

    fn check_answer(&self, qid: usize, answer: &Answer) -> Result<(), String> {
        let report = validate_answer(qid, answer, None, &self.blocklist);
        if report.is_clean() {
            Ok(())
        } else {
            Err(rules_text(&report.error_rules()))
        }
    }
}

fn question_mut(record: &mut ClaimRecord, qid: usize) -> Option<&mut QuestionRecord> {
    record.questions.iter_mut().find(|q| q.qid == qid)
}

fn answer_mut(record: &mut ClaimRecord, qid: usize, index: usize) -> Option<&mut AnswerRecord> {
    question_mut(record, qid)?.answers.get_mut(index)
}
