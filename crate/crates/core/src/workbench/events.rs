//! Append-only session event log and replay.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{Condition, SearchRecord, Session, Verdict};
use crate::claim::Label;
use crate::metrics::OutcomeRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Created,
    Search,
    Submit,
    Abandon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub session_id: String,
    pub kind: EventKind,
    pub time: DateTime<Utc>,
    pub data: Value,
}

/// Payload of a `created` event. The gold label is recorded so that a log is
/// self-contained for scoring; it never leaves the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedData {
    pub study_id: String,
    pub evaluator_id: String,
    pub claim_id: String,
    pub condition: Condition,
    pub repetition: usize,
    pub task: usize,
    pub gold_label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchData {
    pub query: String,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("event log line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("event {index} ({kind:?}) refers to unknown session {session_id}")]
    UnknownSession { index: usize, kind: EventKind, session_id: String },
    #[error("event {index} ({kind:?}) applies to closed session {session_id}")]
    ClosedSession { index: usize, kind: EventKind, session_id: String },
    #[error("event {index}: bad data: {message}")]
    BadData { index: usize, message: String },
}

pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<Event>, LogError> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut events = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(
            serde_json::from_str(&line).map_err(|e| LogError::Malformed { line: i + 1, message: e.to_string() })?,
        );
    }
    Ok(events)
}

pub fn append_event(path: impl AsRef<Path>, event: &Event) -> io::Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(event).map_err(io::Error::other)?;
    line.push('\n');
    f.write_all(line.as_bytes())?;
    f.flush()
}

/// A session rebuilt from the log together with its task and gold label.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayedSession {
    pub session: Session,
    pub task: usize,
    pub gold_label: Label,
}

fn data<T: for<'de> Deserialize<'de>>(index: usize, value: &Value) -> Result<T, LogError> {
    serde_json::from_value(value.clone()).map_err(|e| LogError::BadData { index, message: e.to_string() })
}

/// Sessions in creation order.
pub fn replay(events: &[Event]) -> Result<Vec<ReplayedSession>, LogError> {
    let mut order: Vec<String> = Vec::new();
    let mut sessions: BTreeMap<String, ReplayedSession> = BTreeMap::new();
    for (index, e) in events.iter().enumerate() {
        if e.kind == EventKind::Created {
            let c: CreatedData = data(index, &e.data)?;
            order.push(e.session_id.clone());
            sessions.insert(
                e.session_id.clone(),
                ReplayedSession {
                    session: Session {
                        session_id: e.session_id.clone(),
                        study_id: c.study_id,
                        evaluator_id: c.evaluator_id,
                        claim_id: c.claim_id,
                        condition: c.condition,
                        repetition: c.repetition,
                        load_time: e.time,
                        searches: Vec::new(),
                        verdict: None,
                        submit_time: None,
                        abandoned: false,
                    },
                    task: c.task,
                    gold_label: c.gold_label,
                },
            );
            continue;
        }
        let unknown = || LogError::UnknownSession { index, kind: e.kind, session_id: e.session_id.clone() };
        let s = &mut sessions.get_mut(&e.session_id).ok_or_else(unknown)?.session;
        if !s.is_open() {
            return Err(LogError::ClosedSession { index, kind: e.kind, session_id: e.session_id.clone() });
        }
        match e.kind {
            EventKind::Created => unreachable!(),
            EventKind::Search => {
                let d: SearchData = data(index, &e.data)?;
                s.searches.push(SearchRecord { time: e.time, query: d.query });
            }
            EventKind::Submit => {
                s.verdict = Some(data::<Verdict>(index, &e.data)?);
                s.submit_time = Some(e.time);
            }
            EventKind::Abandon => s.abandoned = true,
        }
    }
    Ok(order.into_iter().map(|id| sessions.remove(&id).expect("recorded")).collect())
}

/// Scored outcomes of the submitted sessions of a log.
pub fn outcomes(replayed: &[ReplayedSession]) -> Vec<OutcomeRecord> {
    replayed
        .iter()
        .filter_map(|r| {
            let s = &r.session;
            let verdict = s.verdict.as_ref()?;
            Some(OutcomeRecord {
                session_id: s.session_id.clone(),
                claim_id: s.claim_id.clone(),
                condition: s.condition.as_str().to_string(),
                repetition: s.repetition,
                predicted: verdict.label,
                gold: r.gold_label,
                elapsed_seconds: s.elapsed_seconds()?,
                searches_used: s.searches.len(),
                difficulty: Some(verdict.difficulty),
            })
        })
        .collect()
}

pub fn outcomes_from_log(path: impl AsRef<Path>) -> Result<Vec<OutcomeRecord>, LogError> {
    Ok(outcomes(&replay(&read_events(path)?)?))
}
