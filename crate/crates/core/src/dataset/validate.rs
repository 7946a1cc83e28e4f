//! Automated quality checks for questions and answers.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::qabrief::{Answer, AnswerType};
use crate::search::Blocklist;
use crate::text;

pub const MIN_QUESTION_TOKENS: usize = 5;
pub const MAX_QUESTION_OVERLAP: usize = 5;
pub const MIN_ANNOTATED_QUESTIONS: usize = 3;
pub const MAX_EXTRACTIVE_TOKENS: usize = 250;
pub const MIN_WRITTEN_ANSWER_TOKENS: usize = 20;

const YES_NO_LEADS: &[&str] =
    &["is", "are", "was", "were", "does", "do", "did", "can", "could", "will", "would", "has", "have"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    TooFewQuestions,
    TooManyQuestions,
    QuestionTooShort,
    QuestionOverlap,
    QuestionCopiesClaim,
    YesNoQuestion,
    ExtractiveEmpty,
    ExtractiveTooLong,
    ExtractiveNotInEvidence,
    AbstractiveTooShort,
    NoAnswerTooShort,
    MissingEvidenceUrl,
    BlockedEvidenceUrl,
    UnansweredQuestion,
    MissingSearchQueries,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::TooFewQuestions => "too_few_questions",
            Rule::TooManyQuestions => "too_many_questions",
            Rule::QuestionTooShort => "question_too_short",
            Rule::QuestionOverlap => "question_overlap",
            Rule::QuestionCopiesClaim => "question_copies_claim",
            Rule::YesNoQuestion => "yes_no_question",
            Rule::ExtractiveEmpty => "extractive_empty",
            Rule::ExtractiveTooLong => "extractive_too_long",
            Rule::ExtractiveNotInEvidence => "extractive_not_in_evidence",
            Rule::AbstractiveTooShort => "abstractive_too_short",
            Rule::NoAnswerTooShort => "no_answer_too_short",
            Rule::MissingEvidenceUrl => "missing_evidence_url",
            Rule::BlockedEvidenceUrl => "blocked_evidence_url",
            Rule::UnansweredQuestion => "unanswered_question",
            Rule::MissingSearchQueries => "missing_search_queries",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub severity: Severity,
    pub qids: Vec<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, rule: Rule, severity: Severity, qids: Vec<usize>, message: String) {
        self.violations.push(Violation { rule, severity, qids, message });
    }

    fn error(&mut self, rule: Rule, qids: Vec<usize>, message: String) {
        self.push(rule, Severity::Error, qids, message);
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Warning)
    }

    /// No errors; warnings are allowed.
    pub fn is_clean(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn error_rules(&self) -> Vec<Rule> {
        self.errors().map(|v| v.rule).collect()
    }
}

/// Annotated question sets need at least three questions; generated briefs
/// carry two to five.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Annotation,
    Generation,
}

/// Number of distinct non-stop-word tokens two questions share.
pub fn question_overlap(a: &str, b: &str) -> usize {
    let a: HashSet<String> = text::content_tokens(a).into_iter().collect();
    text::content_tokens(b).into_iter().collect::<HashSet<_>>().intersection(&a).count()
}

fn is_yes_no_lead(tokens: &[String]) -> bool {
    tokens.len() >= 3 && YES_NO_LEADS.contains(&tokens[0].as_str()) && tokens[1] == "it" && tokens[2] == "true"
}

pub fn validate_question_set(claim: &str, questions: &[(usize, &str)], profile: Profile) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = questions.len();
    match profile {
        Profile::Annotation if n < MIN_ANNOTATED_QUESTIONS => report.error(
            Rule::TooFewQuestions,
            vec![],
            format!("{n} questions; at least {MIN_ANNOTATED_QUESTIONS} required"),
        ),
        Profile::Generation if n < crate::qabrief::MIN_QUESTIONS => report.error(
            Rule::TooFewQuestions,
            vec![],
            format!("{n} questions; at least {} required", crate::qabrief::MIN_QUESTIONS),
        ),
        Profile::Generation if n > crate::qabrief::MAX_QUESTIONS => report.error(
            Rule::TooManyQuestions,
            vec![],
            format!("{n} questions; at most {} allowed", crate::qabrief::MAX_QUESTIONS),
        ),
        _ => {}
    }

    let claim_tokens = text::tokenize(claim);
    for &(qid, q) in questions {
        let toks = text::tokenize(q);
        if toks.len() < MIN_QUESTION_TOKENS {
            report.error(
                Rule::QuestionTooShort,
                vec![qid],
                format!("question {qid} has {} tokens; at least {MIN_QUESTION_TOKENS} required", toks.len()),
            );
        }
        if !toks.is_empty() && toks == claim_tokens {
            report.error(Rule::QuestionCopiesClaim, vec![qid], format!("question {qid} repeats the claim"));
        }
        if is_yes_no_lead(&toks) {
            report.push(
                Rule::YesNoQuestion,
                Severity::Warning,
                vec![qid],
                format!("question {qid} asks whether the claim is true"),
            );
        }
    }
    for (i, &(qa, a)) in questions.iter().enumerate() {
        for &(qb, b) in &questions[i + 1..] {
            let shared = question_overlap(a, b);
            if shared > MAX_QUESTION_OVERLAP {
                report.error(
                    Rule::QuestionOverlap,
                    vec![qa, qb],
                    format!("questions {qa} and {qb} share {shared} words; at most {MAX_QUESTION_OVERLAP} allowed"),
                );
            }
        }
    }
    report
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// True when `needle` occurs in `haystack` once runs of whitespace are collapsed.
pub fn is_substring_normalized(needle: &str, haystack: &str) -> bool {
    normalize_ws(haystack).contains(&normalize_ws(needle))
}

/// Checks one answer. `qid` only labels the violations; `evidence` enables
/// the substring check for extractive answers.
pub fn validate_answer(qid: usize, answer: &Answer, evidence: Option<&str>, blocklist: &Blocklist) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = text::token_count(&answer.text);
    match answer.answer_type {
        AnswerType::Extractive => {
            if answer.text.trim().is_empty() {
                report.error(Rule::ExtractiveEmpty, vec![qid], format!("question {qid}: extractive answer is empty"));
            } else if n > MAX_EXTRACTIVE_TOKENS {
                report.error(
                    Rule::ExtractiveTooLong,
                    vec![qid],
                    format!("question {qid}: extractive answer has {n} words; maximum of {MAX_EXTRACTIVE_TOKENS}"),
                );
            }
            if let Some(ev) = evidence {
                if !answer.text.trim().is_empty() && !is_substring_normalized(&answer.text, ev) {
                    report.error(
                        Rule::ExtractiveNotInEvidence,
                        vec![qid],
                        format!("question {qid}: extractive answer does not occur in the evidence document"),
                    );
                }
            }
        }
        AnswerType::Abstractive if n < MIN_WRITTEN_ANSWER_TOKENS => report.error(
            Rule::AbstractiveTooShort,
            vec![qid],
            format!("question {qid}: abstractive answer has {n} words; at least {MIN_WRITTEN_ANSWER_TOKENS}"),
        ),
        AnswerType::NoAnswer if n < MIN_WRITTEN_ANSWER_TOKENS => report.error(
            Rule::NoAnswerTooShort,
            vec![qid],
            format!("question {qid}: no-answer explanation has {n} words; at least {MIN_WRITTEN_ANSWER_TOKENS}"),
        ),
        _ => {}
    }

    let url = answer.evidence_url.trim();
    if url.is_empty() {
        if answer.answer_type != AnswerType::NoAnswer {
            report.error(Rule::MissingEvidenceUrl, vec![qid], format!("question {qid}: evidence url required"));
        }
    } else if blocklist.is_blocked(url) {
        report.error(
            Rule::BlockedEvidenceUrl,
            vec![qid],
            format!("question {qid}: evidence url {url} is a blocked fact-checking domain"),
        );
    }
    report
}
