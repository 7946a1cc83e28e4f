//! Claim/question/answer dataset: schema, line-delimited storage, split
//! checks, validation, annotation workflow, and summary statistics.

pub mod stats;
pub mod validate;
pub mod workflow;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claim::{Claim, Label, LabelMap};
use crate::qabrief::{Answer, AnswerType, QaBrief, QaPair, Question};
use crate::search::Blocklist;

pub use stats::{compute_stats, Stats};
pub use validate::{validate_answer, validate_question_set, Profile, Rule, ValidationReport};
pub use workflow::{advance_workflow, WorkflowError, WorkflowEvent, WorkflowState};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: field `{field}`: {message}")]
    Schema { line: usize, field: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerStatus {
    #[default]
    Unreviewed,
    Flagged,
    Accepted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "AnswerRecordWire", into = "AnswerRecordWire")]
pub struct AnswerRecord {
    pub answer: Answer,
    pub status: AnswerStatus,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRecordWire {
    #[serde(rename = "type")]
    answer_type: AnswerType,
    text: String,
    url: String,
    status: AnswerStatus,
}

impl From<AnswerRecordWire> for AnswerRecord {
    fn from(w: AnswerRecordWire) -> Self {
        AnswerRecord { answer: Answer::new(w.answer_type, w.text, w.url), status: w.status }
    }
}

impl From<AnswerRecord> for AnswerRecordWire {
    fn from(r: AnswerRecord) -> Self {
        AnswerRecordWire {
            answer_type: r.answer.answer_type,
            text: r.answer.text,
            url: r.answer.evidence_url,
            status: r.status,
        }
    }
}

impl AnswerRecord {
    pub fn new(answer: Answer) -> Self {
        AnswerRecord { answer, status: AnswerStatus::Unreviewed }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub qid: usize,
    pub text: String,
    pub search_queries: Vec<String>,
    pub answers: Vec<AnswerRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim_id: String,
    pub claim: String,
    pub source: String,
    pub label: Option<Label>,
    pub fact_check_url: Option<String>,
    pub split: Split,
    pub state: WorkflowState,
    pub questions: Vec<QuestionRecord>,
}

impl ClaimRecord {
    pub fn to_claim(&self) -> Claim {
        Claim {
            claim_id: self.claim_id.clone(),
            text: self.claim.clone(),
            source: self.source.clone(),
            gold_label: self.label,
            fact_check_url: self.fact_check_url.clone(),
        }
    }

    pub fn question(&self, qid: usize) -> Option<&QuestionRecord> {
        self.questions.iter().find(|q| q.qid == qid)
    }

    pub fn has_no_answer(&self) -> bool {
        self.questions.iter().flat_map(|q| &q.answers).any(|a| a.answer.answer_type == AnswerType::NoAnswer)
    }

    /// The annotated question/answer pairs as a brief, first answer per
    /// question, verbatim.
    pub fn gold_brief(&self) -> QaBrief {
        let pairs = self
            .questions
            .iter()
            .filter_map(|q| {
                let a = q.answers.first()?;
                Some(QaPair {
                    question: Question { claim_id: self.claim_id.clone(), qid: q.qid, text: q.text.clone() },
                    answer: a.answer.clone(),
                })
            })
            .collect();
        QaBrief { claim_id: self.claim_id.clone(), pairs, generator_id: "gold".into() }
    }
}

/// Validation of a stored record: annotation-profile question checks, every
/// answer, and completeness requirements once answers exist.
pub fn validate_record(
    record: &ClaimRecord,
    blocklist: &Blocklist,
    evidence: &dyn Fn(&str) -> Option<String>,
) -> ValidationReport {
    let mut report = validate_questions(record);
    let answering_done = matches!(
        record.state,
        WorkflowState::Answered
            | WorkflowState::AnswersValidated
            | WorkflowState::NoAnswerVerified
            | WorkflowState::Complete
    );
    for q in &record.questions {
        if answering_done && q.answers.is_empty() {
            report.violations.push(validate::Violation {
                rule: Rule::UnansweredQuestion,
                severity: validate::Severity::Error,
                qids: vec![q.qid],
                message: format!("question {} has no answer", q.qid),
            });
        }
        if !q.answers.is_empty() && q.search_queries.is_empty() {
            report.violations.push(validate::Violation {
                rule: Rule::MissingSearchQueries,
                severity: validate::Severity::Error,
                qids: vec![q.qid],
                message: format!("question {} is answered but records no search queries", q.qid),
            });
        }
        for a in &q.answers {
            let ev = if a.answer.evidence_url.is_empty() { None } else { evidence(&a.answer.evidence_url) };
            report.merge(validate_answer(q.qid, &a.answer, ev.as_deref(), blocklist));
        }
    }
    report
}

pub fn validate_questions(record: &ClaimRecord) -> ValidationReport {
    let qs: Vec<(usize, &str)> = record.questions.iter().map(|q| (q.qid, q.text.as_str())).collect();
    validate_question_set(&record.claim, &qs, Profile::Annotation)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<ClaimRecord>,
}

/// On-disk form; `label` may be any rating known to the [`LabelMap`].
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    claim_id: String,
    claim: String,
    source: String,
    label: Option<String>,
    fact_check_url: Option<String>,
    split: Split,
    state: WorkflowState,
    questions: Vec<QuestionRecord>,
}

impl Dataset {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        Self::read_from(BufReader::new(File::open(path)?), &LabelMap::default())
    }

    pub fn load_with(path: impl AsRef<Path>, labels: &LabelMap) -> Result<Self, DatasetError> {
        Self::read_from(BufReader::new(File::open(path)?), labels)
    }

    pub fn read_from(reader: impl BufRead, labels: &LabelMap) -> Result<Self, DatasetError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(parse_record(&line, i + 1, labels)?);
        }
        Ok(Dataset { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), DatasetError> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn get(&self, claim_id: &str) -> Option<&ClaimRecord> {
        self.records.iter().find(|r| r.claim_id == claim_id)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ClaimRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn by_id(&self) -> HashMap<&str, &ClaimRecord> {
        self.records.iter().map(|r| (r.claim_id.as_str(), r)).collect()
    }
}

fn parse_record(line: &str, line_no: usize, labels: &LabelMap) -> Result<ClaimRecord, DatasetError> {
    let schema = |field: String, message: String| DatasetError::Schema { line: line_no, field, message };
    let de = &mut serde_json::Deserializer::from_str(line);
    let raw: RawRecord = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let field = if path == "." {
            inner.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<record>".into())
        } else {
            path
        };
        schema(field, inner)
    })?;
    let label = match raw.label {
        None => None,
        Some(l) => Some(labels.normalize(&l).ok_or_else(|| schema("label".into(), format!("unknown label `{l}`")))?),
    };
    if raw.claim.trim().is_empty() {
        return Err(schema("claim".into(), "must be non-empty".into()));
    }
    Ok(ClaimRecord {
        claim_id: raw.claim_id,
        claim: raw.claim,
        source: raw.source,
        label,
        fact_check_url: raw.fact_check_url,
        split: raw.split,
        state: raw.state,
        questions: raw.questions,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitReport {
    pub counts: BTreeMap<Split, usize>,
    /// Claim ids that occur in more than one split.
    pub overlapping: Vec<String>,
    /// Claim ids repeated within a single split.
    pub duplicates: Vec<String>,
}

impl SplitReport {
    pub fn is_clean(&self) -> bool {
        self.overlapping.is_empty() && self.duplicates.is_empty()
    }
}

pub fn split_check(dataset: &Dataset) -> SplitReport {
    let mut seen: BTreeMap<&str, Vec<Split>> = BTreeMap::new();
    let mut report = SplitReport::default();
    for r in &dataset.records {
        *report.counts.entry(r.split).or_default() += 1;
        seen.entry(&r.claim_id).or_default().push(r.split);
    }
    for (id, splits) in seen {
        let mut distinct = splits.clone();
        distinct.sort();
        distinct.dedup();
        if distinct.len() > 1 {
            report.overlapping.push(id.to_string());
        } else if splits.len() > 1 {
            report.duplicates.push(id.to_string());
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LINE: &str = r#"{"claim_id":"c1","claim":"Social Security was invented in Wisconsin.","source":"Russ Feingold","label":"true","fact_check_url":"https://www.politifact.com/x","split":"test","state":"complete","questions":[{"qid":1,"text":"Who invented social security in America?","search_queries":["social security inventor"],"answers":[{"type":"extractive","text":"Edwin Witte.","url":"https://en.wikipedia.org/wiki/Edwin_Witte","status":"accepted"}]}]}"#;

    #[test]
    fn round_trip_is_byte_stable() {
        let ds = Dataset::read_from(LINE.as_bytes(), &LabelMap::default()).unwrap();
        let mut out = Vec::new();
        ds.write_to(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{LINE}\n"));
    }

    #[test]
    fn fine_grained_label_is_normalized() {
        let line = LINE.replace(r#""label":"true""#, r#""label":"Mostly False""#);
        let ds = Dataset::read_from(line.as_bytes(), &LabelMap::default()).unwrap();
        assert_eq!(ds.records[0].label, Some(Label::False));
    }

    #[test]
    fn schema_errors_name_line_and_field() {
        let bad = LINE.replace(r#""type":"extractive""#, r#""type":"summary""#);
        let input = format!("{LINE}\n{bad}\n");
        match Dataset::read_from(input.as_bytes(), &LabelMap::default()) {
            Err(DatasetError::Schema { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "questions[0].answers[0].type");
            }
            other => panic!("unexpected {other:?}"),
        }
        let missing = LINE.replace(r#""split":"test","#, "");
        match Dataset::read_from(missing.as_bytes(), &LabelMap::default()) {
            Err(DatasetError::Schema { line: 1, field, .. }) => assert_eq!(field, "split"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn split_overlap_detected() {
        let mut ds = Dataset::read_from(LINE.as_bytes(), &LabelMap::default()).unwrap();
        let mut other = ds.records[0].clone();
        other.split = Split::Train;
        ds.records.push(other);
        let r = split_check(&ds);
        assert_eq!(r.overlapping, vec!["c1".to_string()]);
        assert!(!r.is_clean());
    }

    #[test]
    fn gold_brief_is_verbatim() {
        let ds = Dataset::read_from(LINE.as_bytes(), &LabelMap::default()).unwrap();
        let brief = ds.records[0].gold_brief();
        assert_eq!(brief.generator_id, "gold");
        assert_eq!(brief.pairs[0].answer, ds.records[0].questions[0].answers[0].answer);
    }

    fn arb_answer() -> impl Strategy<Value = AnswerRecord> {
        (
            prop_oneof![Just(AnswerType::Extractive), Just(AnswerType::Abstractive), Just(AnswerType::NoAnswer)],
            "[a-zA-Z .,\"\\\\é]{0,40}",
            "(https://[a-z]{1,8}\\.org/[a-z]{0,5})?",
            prop_oneof![Just(AnswerStatus::Unreviewed), Just(AnswerStatus::Flagged), Just(AnswerStatus::Accepted)],
        )
            .prop_map(|(t, text, url, status)| AnswerRecord { answer: Answer::new(t, text, url), status })
    }

    fn arb_record() -> impl Strategy<Value = ClaimRecord> {
        (
            "[a-z0-9]{1,6}",
            "[A-Za-z ]{1,30}",
            prop::option::of(prop_oneof![Just(Label::True), Just(Label::False), Just(Label::Middle)]),
            prop::collection::vec(
                (
                    "[A-Za-z ?]{0,30}",
                    prop::collection::vec("[a-z ]{0,10}", 0..3),
                    prop::collection::vec(arb_answer(), 0..3),
                ),
                0..4,
            ),
        )
            .prop_map(|(id, claim, label, qs)| ClaimRecord {
                claim_id: id,
                claim: format!("C {claim}"),
                source: String::new(),
                label,
                fact_check_url: None,
                split: Split::Valid,
                state: WorkflowState::Answered,
                questions: qs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (text, search_queries, answers))| QuestionRecord {
                        qid: i + 1,
                        text,
                        search_queries,
                        answers,
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn load_save_round_trip(records in prop::collection::vec(arb_record(), 0..5)) {
            let ds = Dataset { records };
            let mut buf = Vec::new();
            ds.write_to(&mut buf).unwrap();
            let back = Dataset::read_from(buf.as_slice(), &LabelMap::default()).unwrap();
            prop_assert_eq!(&back, &ds);
            let mut again = Vec::new();
            back.write_to(&mut again).unwrap();
            prop_assert_eq!(again, buf);
        }
    }
}
