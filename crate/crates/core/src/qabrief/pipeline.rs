//! The QA-brief pipeline: questions, top-hit evidence, typed answers.

use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use super::backend::{Answerer, BackendError, QaRequest, QgReply, QgRequest, QuestionGenerator};
use super::baseline::{self, baseline_answer, baseline_generate_questions};
use super::{Answer, AnswerType, QaBrief, QaPair, QgMode, Question, MAX_QUESTIONS, MIN_QUESTIONS};
use crate::claim::Claim;
use crate::corpus::Corpus;
use crate::dataset::validate::{validate_answer, validate_question_set, Profile, Rule};
use crate::entity::AliasTable;
use crate::search::{SearchError, SearchProxy};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: QgMode,
    /// Non-blocked hits tried before giving up on evidence for a question.
    pub evidence_attempts: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { mode: QgMode::Iterative, evidence_attempts: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    pub url: String,
    pub text: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvidenceError {
    #[error("no admissible evidence found")]
    NotFound,
    #[error("evidence fetch failed: {0}")]
    Fetch(#[from] SearchError),
}

pub struct QaBriefer {
    corpus: Arc<Corpus>,
    aliases: Arc<AliasTable>,
    proxy: SearchProxy,
    question_backend: Option<Arc<dyn QuestionGenerator>>,
    answer_backend: Option<Arc<dyn Answerer>>,
    config: PipelineConfig,
}

impl QaBriefer {
    /// A pipeline using only the built-in baselines.
    pub fn baseline(corpus: Arc<Corpus>, aliases: Arc<AliasTable>, proxy: SearchProxy) -> Self {
        QaBriefer {
            corpus,
            aliases,
            proxy,
            question_backend: None,
            answer_backend: None,
            config: PipelineConfig::default(),
        }
    }

    pub fn with_config(mut self, config: PipelineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_question_backend(mut self, backend: Arc<dyn QuestionGenerator>) -> Self {
        self.question_backend = Some(backend);
        self
    }

    pub fn with_answer_backend(mut self, backend: Arc<dyn Answerer>) -> Self {
        self.answer_backend = Some(backend);
        self
    }

    pub fn proxy(&self) -> &SearchProxy {
        &self.proxy
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Raw questions from a backend, capped at five. Iterative mode asks one
    /// question at a time and stops at the end marker.
    pub fn backend_questions(
        &self,
        claim: &Claim,
        backend: &dyn QuestionGenerator,
    ) -> Result<Vec<String>, BackendError> {
        let mut request = QgRequest {
            claim_id: claim.claim_id.clone(),
            claim: claim.text.clone(),
            source: match self.config.mode {
                QgMode::ClaimOnly => String::new(),
                _ => claim.source.clone(),
            },
            mode: self.config.mode,
            previous_questions: Vec::new(),
        };
        if self.config.mode != QgMode::Iterative {
            return match backend.generate(&request)? {
                QgReply::Questions(mut qs) => {
                    qs.truncate(MAX_QUESTIONS);
                    Ok(qs)
                }
                QgReply::Question(q) => Ok(vec![q]),
                QgReply::End => Ok(vec![]),
            };
        }
        while request.previous_questions.len() < MAX_QUESTIONS {
            match backend.generate(&request)? {
                QgReply::Question(q) => request.previous_questions.push(q),
                QgReply::End => break,
                QgReply::Questions(_) => {
                    return Err(BackendError::Protocol("iterative mode expects one question per reply".into()))
                }
            }
        }
        Ok(request.previous_questions)
    }

    /// Validated backend questions, falling back to the baseline generator
    /// when no backend is configured or fewer than two questions survive.
    /// Returns the questions and the id of the generator that produced them.
    pub fn generate_questions(&self, claim: &Claim) -> (Vec<Question>, String) {
        if let Some(backend) = &self.question_backend {
            match self.backend_questions(claim, backend.as_ref()) {
                Ok(raw) => {
                    let kept = filter_questions(&claim.text, raw);
                    if kept.len() >= MIN_QUESTIONS {
                        let qs = kept
                            .into_iter()
                            .enumerate()
                            .map(|(i, text)| Question { claim_id: claim.claim_id.clone(), qid: i + 1, text })
                            .collect();
                        return (qs, backend.id().to_string());
                    }
                    warn!("claim {}: backend produced {} valid questions; using baseline", claim.claim_id, kept.len());
                }
                Err(e) => warn!("claim {}: question backend failed ({e}); using baseline", claim.claim_id),
            }
        }
        (baseline_generate_questions(claim, &self.aliases, &self.corpus), "baseline".to_string())
    }

    /// Text of the first non-blocked hit that has any, trying up to
    /// `evidence_attempts` hits.
    pub fn find_evidence(&self, question: &Question) -> Result<Evidence, EvidenceError> {
        let hits = self.proxy.search(&question.text, self.config.evidence_attempts)?;
        hits.iter()
            .find_map(|hit| {
                let text = self.proxy.document_text(hit)?;
                (!text.trim().is_empty()).then(|| Evidence { url: hit.url.clone(), text })
            })
            .ok_or(EvidenceError::NotFound)
    }

    /// Backend answer if it satisfies every answer invariant, otherwise the
    /// baseline answer.
    pub fn answer_question(&self, question: &Question, evidence: &Evidence) -> Answer {
        if let Some(backend) = &self.answer_backend {
            let request = QaRequest {
                claim_id: question.claim_id.clone(),
                qid: question.qid,
                question: question.text.clone(),
                evidence: evidence.text.clone(),
            };
            match backend.answer(&request) {
                Ok(reply) => {
                    let answer = Answer::new(reply.answer_type, reply.text, evidence.url.clone());
                    let report = validate_answer(question.qid, &answer, Some(&evidence.text), self.proxy.blocklist());
                    if report.is_clean() {
                        return answer;
                    }
                    let rules: Vec<Rule> = report.error_rules();
                    warn!(
                        "claim {} question {}: backend answer violates {:?}; using baseline",
                        question.claim_id, question.qid, rules
                    );
                }
                Err(e) => warn!(
                    "claim {} question {}: answer backend failed ({e}); using baseline",
                    question.claim_id, question.qid
                ),
            }
        }
        let mut answer = baseline_answer(question, &evidence.text);
        answer.evidence_url = evidence.url.clone();
        answer
    }

    fn answer_pair(&self, question: Question) -> QaPair {
        let answer = match self.find_evidence(&question) {
            Ok(evidence) => self.answer_question(&question, &evidence),
            Err(e) => {
                if let EvidenceError::Fetch(err) = &e {
                    warn!("claim {} question {}: {err}", question.claim_id, question.qid);
                }
                Answer::new(AnswerType::NoAnswer, baseline::not_found_explanation(&question.text), "")
            }
        };
        QaPair { question, answer }
    }

    pub fn generate_qabrief(&self, claim: &Claim) -> QaBrief {
        let (questions, generator_id) = self.generate_questions(claim);
        let pairs = questions.into_par_iter().map(|q| self.answer_pair(q)).collect();
        QaBrief { claim_id: claim.claim_id.clone(), pairs, generator_id }
    }

    /// Briefs for many claims, computed in parallel, in input order.
    pub fn generate_many(&self, claims: &[Claim]) -> Vec<QaBrief> {
        claims.par_iter().map(|c| self.generate_qabrief(c)).collect()
    }
}

/// Drops questions that are too short, copy the claim, duplicate an earlier
/// question, or overlap an earlier kept question too much.
fn filter_questions(claim: &str, raw: Vec<String>) -> Vec<String> {
    let mut kept: Vec<String> = Vec::new();
    for q in raw {
        let mut trial: Vec<(usize, &str)> = kept.iter().enumerate().map(|(i, t)| (i + 1, t.as_str())).collect();
        trial.push((trial.len() + 1, q.as_str()));
        let ok = !kept.contains(&q)
            && validate_question_set(claim, &trial, Profile::Generation)
                .errors()
                .all(|v| v.rule == Rule::TooFewQuestions);
        if ok {
            kept.push(q);
        } else {
            warn!("dropping generated question {q:?}");
        }
    }
    kept
}
