//! Question-generation BLEU, answer token F1 and fact-check outcome metrics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::claim::{Difficulty, Label};
use crate::dataset::ClaimRecord;
use crate::qabrief::AnswerType;
use crate::text;

pub const BLEU_MAX_N: usize = 4;
/// Joins the questions of one claim. Never produced by the tokenizer.
pub const QUESTION_SEPARATOR: &str = "<sep>";
pub const HISTOGRAM_BIN_SECONDS: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub prediction: String,
    pub references: Vec<String>,
}

/// Corpus BLEU over tokenized pairs. Precision for n >= 2 uses add-one
/// smoothing; the brevity penalty uses the closest reference length, the
/// shorter one on ties.
pub fn bleu_tokens(pairs: &[(Vec<String>, Vec<Vec<String>>)], max_n: usize) -> f64 {
    let pred_len: usize = pairs.iter().map(|(p, _)| p.len()).sum();
    if pred_len == 0 || max_n == 0 {
        return 0.0;
    }
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let mut ref_len = 0usize;
    for (pred, refs) in pairs {
        ref_len += refs.iter().map(Vec::len).min_by_key(|&r| (r.abs_diff(pred.len()), r)).unwrap_or(0);
        for n in 1..=max_n {
            let counts = ngram_counts(pred, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in refs {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_default();
                    *e = (*e).max(c);
                }
            }
            matches[n - 1] += counts.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum::<usize>();
            totals[n - 1] += counts.values().sum::<usize>();
        }
    }
    if matches[0] == 0 {
        return 0.0;
    }
    let log_precision: f64 = (0..max_n)
        .map(|i| {
            let (m, t) = if i == 0 { (matches[i], totals[i]) } else { (matches[i] + 1, totals[i] + 1) };
            (m as f64 / t as f64).ln()
        })
        .sum::<f64>()
        / max_n as f64;
    let bp = if pred_len > ref_len { 1.0 } else { (1.0 - ref_len as f64 / pred_len as f64).exp() };
    bp * log_precision.exp()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_default() += 1;
        }
    }
    counts
}

pub fn bleu(corpus: &[EvalPair], max_n: usize) -> f64 {
    let pairs: Vec<_> = corpus
        .iter()
        .map(|p| (text::tokenize(&p.prediction), p.references.iter().map(|r| text::tokenize(r)).collect()))
        .collect();
    bleu_tokens(&pairs, max_n)
}

/// Lowercase, delete punctuation, drop articles, split on whitespace.
pub fn normalize_answer(s: &str) -> Vec<String> {
    let cleaned: String =
        s.chars().flat_map(char::to_lowercase).filter(|c| c.is_alphanumeric() || c.is_whitespace()).collect();
    cleaned.split_whitespace().filter(|w| !matches!(*w, "a" | "an" | "the")).map(str::to_string).collect()
}

pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let pred = normalize_answer(prediction);
    let gold = normalize_answer(gold);
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for g in &gold {
        *gold_counts.entry(g).or_default() += 1;
    }
    let mut overlap = 0usize;
    for p in &pred {
        if let Some(c) = gold_counts.get_mut(p.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / pred.len() as f64;
    let r = overlap as f64 / gold.len() as f64;
    2.0 * p * r / (p + r)
}

pub fn max_token_f1<'a>(prediction: &str, golds: impl IntoIterator<Item = &'a str>) -> f64 {
    golds.into_iter().map(|g| token_f1(prediction, g)).fold(0.0, f64::max)
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub claim_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qid: Option<usize>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_type: Option<AnswerType>,
    /// Conditioning mode or other grouping key for per-mode breakdowns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QgReport {
    pub bleu: f64,
    pub claims_scored: usize,
    /// Claims of the evaluated records with no prediction.
    pub missing: Vec<String>,
    /// Predicted claims absent from the evaluated records.
    pub unknown: Vec<String>,
    pub per_mode: BTreeMap<String, f64>,
}

fn question_sequence<'a>(questions: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut out = Vec::new();
    for (i, q) in questions.into_iter().enumerate() {
        if i > 0 {
            out.push(QUESTION_SEPARATOR.to_string());
        }
        out.extend(text::tokenize(q));
    }
    out
}

/// `(qid, line, text)` of a predicted question.
type OrderedQuestion<'a> = (usize, usize, &'a str);
/// Tokenized hypothesis with its tokenized references.
type TokenizedPair = (Vec<String>, Vec<Vec<String>>);

/// BLEU of generated question sets against gold question sets. Questions of
/// a claim are ordered by qid when given, else by file order.
pub fn qg_eval<'a>(predictions: &[Prediction], records: impl IntoIterator<Item = &'a ClaimRecord>) -> QgReport {
    let records: Vec<&ClaimRecord> = records.into_iter().collect();
    let mut grouped: BTreeMap<(&str, &str), Vec<OrderedQuestion>> = BTreeMap::new();
    for (line, p) in predictions.iter().enumerate() {
        let mode = p.mode.as_deref().unwrap_or("all");
        grouped.entry((mode, p.claim_id.as_str())).or_default().push((p.qid.unwrap_or(usize::MAX), line, &p.text));
    }
    let by_id: HashMap<&str, &ClaimRecord> = records.iter().map(|r| (r.claim_id.as_str(), *r)).collect();

    let mut per_mode_pairs: BTreeMap<&str, Vec<TokenizedPair>> = BTreeMap::new();
    let mut unknown: Vec<String> = Vec::new();
    for ((mode, claim_id), mut qs) in grouped {
        let Some(record) = by_id.get(claim_id) else {
            unknown.push(claim_id.to_string());
            continue;
        };
        qs.sort();
        let pred = question_sequence(qs.iter().map(|q| q.2));
        let reference = question_sequence(record.questions.iter().map(|q| q.text.as_str()));
        per_mode_pairs.entry(mode).or_default().push((pred, vec![reference]));
    }
    unknown.sort();
    unknown.dedup();

    let predicted: std::collections::HashSet<&str> = predictions.iter().map(|p| p.claim_id.as_str()).collect();
    let missing =
        records.iter().filter(|r| !predicted.contains(r.claim_id.as_str())).map(|r| r.claim_id.clone()).collect();

    let all: Vec<_> = per_mode_pairs.values().flatten().cloned().collect();
    QgReport {
        bleu: bleu_tokens(&all, BLEU_MAX_N),
        claims_scored: all.len(),
        missing,
        unknown,
        per_mode: per_mode_pairs.iter().map(|(m, p)| (m.to_string(), bleu_tokens(p, BLEU_MAX_N))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaReport {
    pub f1: f64,
    pub questions_scored: usize,
    /// `claim_id#qid` of answered gold questions with no prediction.
    pub missing: Vec<String>,
    /// `claim_id#qid` of predictions with no answered gold question.
    pub unknown: Vec<String>,
}

/// Score of one predicted answer against one gold answer.
pub fn answer_score(pred_type: Option<AnswerType>, pred_text: &str, gold_type: AnswerType, gold_text: &str) -> f64 {
    if pred_type == Some(AnswerType::NoAnswer) && gold_type == AnswerType::NoAnswer {
        1.0
    } else {
        token_f1(pred_text, gold_text)
    }
}

/// Mean over answered gold questions of the best score against any gold
/// answer.
pub fn qa_eval<'a>(predictions: &[Prediction], records: impl IntoIterator<Item = &'a ClaimRecord>) -> QaReport {
    let mut gold: BTreeMap<(String, usize), Vec<(AnswerType, &str)>> = BTreeMap::new();
    for r in records {
        for q in &r.questions {
            if !q.answers.is_empty() {
                gold.insert(
                    (r.claim_id.clone(), q.qid),
                    q.answers.iter().map(|a| (a.answer.answer_type, a.answer.text.as_str())).collect(),
                );
            }
        }
    }
    let mut seen: BTreeMap<(String, usize), f64> = BTreeMap::new();
    let mut unknown = Vec::new();
    for p in predictions {
        let key = (p.claim_id.clone(), p.qid.unwrap_or(0));
        match gold.get(&key) {
            Some(golds) => {
                let score = golds.iter().map(|(t, g)| answer_score(p.answer_type, &p.text, *t, g)).fold(0.0, f64::max);
                seen.entry(key).or_insert(score);
            }
            None => unknown.push(format!("{}#{}", key.0, key.1)),
        }
    }
    let missing = gold.keys().filter(|k| !seen.contains_key(*k)).map(|(c, q)| format!("{c}#{q}")).collect();
    let n = seen.len();
    QaReport {
        f1: if n == 0 { 0.0 } else { seen.values().sum::<f64>() / n as f64 },
        questions_scored: n,
        missing,
        unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub session_id: String,
    pub claim_id: String,
    pub condition: String,
    pub repetition: usize,
    pub predicted: Label,
    pub gold: Label,
    pub elapsed_seconds: f64,
    pub searches_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
}

impl OutcomeRecord {
    pub fn correct(&self) -> bool {
        self.predicted == self.gold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Accuracy {
    fn of<'a>(outcomes: impl IntoIterator<Item = &'a OutcomeRecord>) -> Self {
        let (mut correct, mut total) = (0, 0);
        for o in outcomes {
            total += 1;
            correct += o.correct() as usize;
        }
        Accuracy { correct, total, accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 } }
    }
}

fn group_by<K: Ord>(outcomes: &[OutcomeRecord], key: impl Fn(&OutcomeRecord) -> K) -> BTreeMap<K, Vec<&OutcomeRecord>> {
    let mut groups: BTreeMap<K, Vec<&OutcomeRecord>> = BTreeMap::new();
    for o in outcomes {
        groups.entry(key(o)).or_default().push(o);
    }
    groups
}

/// Strict-equality accuracy per condition.
pub fn fact_check_accuracy(outcomes: &[OutcomeRecord]) -> BTreeMap<String, Accuracy> {
    group_by(outcomes, |o| o.condition.clone()).into_iter().map(|(k, v)| (k, Accuracy::of(v))).collect()
}

/// Per-condition accuracy of each repetition, with the population variance
/// across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionAccuracy {
    pub per_repetition: BTreeMap<usize, Accuracy>,
    pub mean: f64,
    pub variance: f64,
}

pub fn accuracy_by_repetition(outcomes: &[OutcomeRecord]) -> BTreeMap<String, RepetitionAccuracy> {
    group_by(outcomes, |o| o.condition.clone())
        .into_iter()
        .map(|(cond, group)| {
            let mut reps: BTreeMap<usize, Vec<&OutcomeRecord>> = BTreeMap::new();
            for o in group {
                reps.entry(o.repetition).or_default().push(o);
            }
            let per_repetition: BTreeMap<usize, Accuracy> =
                reps.into_iter().map(|(r, v)| (r, Accuracy::of(v))).collect();
            let values: Vec<f64> = per_repetition.values().map(|a| a.accuracy).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            (cond, RepetitionAccuracy { per_repetition, mean, variance })
        })
        .collect()
}

/// Accuracy per self-reported difficulty, per condition.
pub fn difficulty_table(outcomes: &[OutcomeRecord]) -> BTreeMap<String, BTreeMap<Difficulty, Accuracy>> {
    group_by(outcomes, |o| o.condition.clone())
        .into_iter()
        .map(|(cond, group)| {
            let mut by: BTreeMap<Difficulty, Vec<&OutcomeRecord>> = BTreeMap::new();
            for o in group {
                if let Some(d) = o.difficulty {
                    by.entry(d).or_default().push(o);
                }
            }
            (cond, by.into_iter().map(|(d, v)| (d, Accuracy::of(v))).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSummary {
    pub sessions: usize,
    pub mean_seconds: f64,
    pub median_seconds: f64,
    /// Entry i counts sessions with elapsed time in [60 i, 60 (i + 1)).
    pub histogram: Vec<usize>,
    /// Fraction of sessions that never used the search bar.
    pub no_search_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeStats {
    pub overall: TimeSummary,
    pub per_condition: BTreeMap<String, TimeSummary>,
}

fn summarize<'a>(outcomes: impl IntoIterator<Item = &'a OutcomeRecord>) -> TimeSummary {
    let outcomes: Vec<&OutcomeRecord> = outcomes.into_iter().collect();
    let n = outcomes.len();
    if n == 0 {
        return TimeSummary {
            sessions: 0,
            mean_seconds: 0.0,
            median_seconds: 0.0,
            histogram: vec![],
            no_search_rate: 0.0,
        };
    }
    let mut times: Vec<f64> = outcomes.iter().map(|o| o.elapsed_seconds).collect();
    times.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 { times[n / 2] } else { (times[n / 2 - 1] + times[n / 2]) / 2.0 };
    let mut histogram = Vec::new();
    for t in &times {
        let bin = (t / HISTOGRAM_BIN_SECONDS).floor() as usize;
        if histogram.len() <= bin {
            histogram.resize(bin + 1, 0);
        }
        histogram[bin] += 1;
    }
    TimeSummary {
        sessions: n,
        mean_seconds: times.iter().sum::<f64>() / n as f64,
        median_seconds: median,
        histogram,
        no_search_rate: outcomes.iter().filter(|o| o.searches_used == 0).count() as f64 / n as f64,
    }
}

pub fn time_stats(outcomes: &[OutcomeRecord]) -> TimeStats {
    TimeStats {
        overall: summarize(outcomes),
        per_condition: group_by(outcomes, |o| o.condition.clone())
            .into_iter()
            .map(|(k, v)| (k, summarize(v)))
            .collect(),
    }
}
