use std::collections::BTreeMap;

use serde::Serialize;

use super::{Dataset, Split};
use crate::qabrief::AnswerType;
use crate::text;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStats {
    pub claims: usize,
    pub qa_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub claims: usize,
    pub qa_pairs: usize,
    pub splits: BTreeMap<Split, SplitStats>,
    pub mean_questions_per_claim: f64,
    pub mean_question_tokens: f64,
    pub mean_answer_tokens: f64,
    /// Lowercased first token of each question.
    pub first_word_histogram: BTreeMap<String, usize>,
    /// Share of answer records of each type.
    pub answer_type_proportions: BTreeMap<AnswerType, f64>,
}

fn mean(total: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / n as f64
    }
}

/// A QA pair is a question together with its answer records; every question
/// counts as one pair.
pub fn compute_stats(dataset: &Dataset) -> Stats {
    let mut splits: BTreeMap<Split, SplitStats> =
        Split::ALL.iter().map(|&s| (s, SplitStats { claims: 0, qa_pairs: 0 })).collect();
    let mut questions = 0usize;
    let mut question_tokens = 0usize;
    let mut answers = 0usize;
    let mut answer_tokens = 0usize;
    let mut first_words: BTreeMap<String, usize> = BTreeMap::new();
    let mut types: BTreeMap<AnswerType, usize> = BTreeMap::new();

    for r in &dataset.records {
        let s = splits.get_mut(&r.split).expect("all splits present");
        s.claims += 1;
        s.qa_pairs += r.questions.len();
        for q in &r.questions {
            let toks = text::tokenize(&q.text);
            questions += 1;
            question_tokens += toks.len();
            if let Some(first) = toks.first() {
                *first_words.entry(first.clone()).or_default() += 1;
            }
            for a in &q.answers {
                answers += 1;
                answer_tokens += text::token_count(&a.answer.text);
                *types.entry(a.answer.answer_type).or_default() += 1;
            }
        }
    }

    Stats {
        claims: dataset.records.len(),
        qa_pairs: questions,
        splits,
        mean_questions_per_claim: mean(questions, dataset.records.len()),
        mean_question_tokens: mean(question_tokens, questions),
        mean_answer_tokens: mean(answer_tokens, answers),
        first_word_histogram: first_words,
        answer_type_proportions: types.into_iter().map(|(t, n)| (t, mean(n, answers))).collect(),
    }
}
