//! Deterministic lexical baselines for question generation and answering.

use std::collections::HashSet;

use crate::claim::Claim;
use crate::corpus::Corpus;
use crate::dataset::validate::{question_overlap, MAX_QUESTION_OVERLAP, MIN_QUESTION_TOKENS};
use crate::entity::{detect_mentions, rank_candidates, AliasTable};
use crate::text;

use super::{Answer, AnswerType, Question, MAX_QUESTIONS, MIN_QUESTIONS};

pub const MAX_WINDOW_SENTENCES: usize = 3;
pub const MAX_EXTRACTIVE_TOKENS: usize = 250;
pub const NO_ANSWER_THRESHOLD: f64 = 0.2;
const MAX_MENTION_QUESTIONS: usize = 3;

const PERSON_CUES: &[&str] = &["born", "politician", "president", "senator", "he", "she", "his", "her"];

fn strip_terminal(text: &str) -> &str {
    text.trim().trim_end_matches(['.', '!', '?', ';', ':', ',']).trim_end()
}

/// Template questions about the claim: one per detected entity mention, one
/// about the first number in the claim, one about the statement's origin,
/// and one asking for evidence about its leading content words. Candidates
/// that are too short, copy the claim, or overlap an accepted question by
/// more than the allowed number of content tokens are skipped.
pub fn baseline_generate_questions(claim: &Claim, table: &AliasTable, corpus: &Corpus) -> Vec<Question> {
    let spans = text::tokenize_spans(&claim.text);
    let tokens: Vec<String> = spans.iter().map(|s| s.token.clone()).collect();
    let surface = |a: usize, b: usize| claim.text[spans[a].range.start..spans[b - 1].range.end].to_string();

    let mut candidates = Vec::new();
    for m in detect_mentions(&claim.claim_id, &tokens, table).iter().take(MAX_MENTION_QUESTIONS) {
        let name = surface(m.span.0, m.span.1);
        let cands: Vec<String> =
            table.candidates(&tokens[m.span.0..m.span.1]).map(|c| c.iter().cloned().collect()).unwrap_or_default();
        let person = rank_candidates(m, &tokens, &cands, corpus)
            .first()
            .and_then(|(id, _)| corpus.get(id))
            .map(|d| text::tokenize(d.lead()).iter().any(|t| PERSON_CUES.contains(&t.as_str())))
            .unwrap_or(false);
        candidates.push(if person {
            format!("Who is {name}, and what is this person known for?")
        } else {
            format!("What is {name} known for?")
        });
    }

    if let Some(pos) = tokens.iter().position(|t| t.chars().any(|c| c.is_ascii_digit())) {
        let head: Vec<&str> = tokens[..pos].iter().filter(|t| !text::is_stop_word(t)).map(String::as_str).collect();
        let head = head[head.len().saturating_sub(3)..].join(" ");
        let phrase = surface(pos, (pos + 3).min(tokens.len()));
        let phrase = strip_terminal(&phrase);
        candidates.push(if head.is_empty() {
            format!("What is the correct figure given as {phrase}?")
        } else {
            format!("What is the correct figure for {head}, given as {phrase}?")
        });
    }

    let kernel = strip_terminal(&claim.text);
    if !kernel.is_empty() {
        candidates.push(format!("What is the origin of the statement that {kernel}?"));
    }
    let lead: Vec<String> = text::content_tokens(&claim.text).into_iter().take(4).collect();
    if !lead.is_empty() {
        candidates.push(format!("What evidence supports or contradicts the claim about {}?", lead.join(" ")));
    }

    let mut accepted: Vec<String> = Vec::new();
    for cand in candidates {
        if accepted.len() == MAX_QUESTIONS {
            break;
        }
        if admissible(&cand, &tokens, &accepted) {
            accepted.push(cand);
        }
    }
    if accepted.len() < MIN_QUESTIONS {
        let fallback = "Which sources document the events described in this statement?".to_string();
        if admissible(&fallback, &tokens, &accepted) {
            accepted.push(fallback);
        }
    }

    accepted
        .into_iter()
        .enumerate()
        .map(|(i, text)| Question { claim_id: claim.claim_id.clone(), qid: i + 1, text })
        .collect()
}

fn admissible(candidate: &str, claim_tokens: &[String], accepted: &[String]) -> bool {
    let toks = text::tokenize(candidate);
    toks.len() >= MIN_QUESTION_TOKENS
        && toks != claim_tokens
        && accepted.iter().all(|q| q != candidate && question_overlap(q, candidate) <= MAX_QUESTION_OVERLAP)
}

/// A run of consecutive evidence sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub first: usize,
    pub len: usize,
}

/// Byte range of each evidence sentence with trailing whitespace trimmed.
pub fn evidence_sentences(evidence: &str) -> Vec<std::ops::Range<usize>> {
    text::sentence_ranges(evidence)
        .into_iter()
        .map(|r| r.start..r.start + evidence[r.clone()].trim_end().len())
        .filter(|r| !r.is_empty())
        .collect()
}

pub fn window_text<'a>(evidence: &'a str, sentences: &[std::ops::Range<usize>], w: Window) -> &'a str {
    &evidence[sentences[w.first].start..sentences[w.first + w.len - 1].end]
}

/// Fraction of the question's distinct content tokens present in `window`.
pub fn window_score(question_terms: &HashSet<String>, window: &str) -> f64 {
    if question_terms.is_empty() {
        return 0.0;
    }
    let present: HashSet<String> = text::tokenize(window).into_iter().collect();
    question_terms.iter().filter(|t| present.contains(*t)).count() as f64 / question_terms.len() as f64
}

/// Best window of 1 to 3 sentences (at most 250 tokens): highest score, then
/// fewest sentences, then earliest start.
pub fn best_window(question: &str, evidence: &str) -> Option<(Window, f64)> {
    let terms: HashSet<String> = text::content_tokens(question).into_iter().collect();
    let sentences = evidence_sentences(evidence);
    let mut best: Option<(Window, f64)> = None;
    for first in 0..sentences.len() {
        for len in 1..=MAX_WINDOW_SENTENCES.min(sentences.len() - first) {
            let w = Window { first, len };
            let body = window_text(evidence, &sentences, w);
            if text::token_count(body) > MAX_EXTRACTIVE_TOKENS {
                break;
            }
            let score = window_score(&terms, body);
            if best.is_none_or(|(b, s)| score > s || (score == s && len < b.len)) {
                best = Some((w, score));
            }
        }
    }
    best
}

fn question_head(question: &str) -> String {
    let head = strip_terminal(question);
    let mut chars = head.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn no_answer_explanation(question: &str) -> String {
    format!(
        "No passage in the retrieved evidence document addresses this question; the top search result does not contain the requested information about {}.",
        question_head(question)
    )
}

pub fn not_found_explanation(question: &str) -> String {
    format!(
        "The search returned no admissible evidence document for this question, so there is no source from which to extract information about {}.",
        question_head(question)
    )
}

/// Extractive answer from the best sentence window, or a no-answer with a
/// templated explanation when the best window covers less than 20% of the
/// question's content tokens.
pub fn baseline_answer(question: &Question, evidence: &str) -> Answer {
    match best_window(&question.text, evidence) {
        Some((w, score)) if score >= NO_ANSWER_THRESHOLD => {
            let sentences = evidence_sentences(evidence);
            Answer::new(AnswerType::Extractive, window_text(evidence, &sentences, w), "")
        }
        _ => Answer::new(AnswerType::NoAnswer, no_answer_explanation(&question.text), ""),
    }
}
