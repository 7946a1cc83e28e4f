//! Human fact-checking study engine: condition assignment, timed sessions,
//! proxied search, verdict capture and analytics.
//!
//! All state changes are written to a per-study append-only event log under
//! `<state_dir>/studies/<study_id>/events.jsonl`; state is rebuilt by replay.

pub mod events;
pub mod http;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claim::{Difficulty, Label};
use crate::corpus::Corpus;
use crate::dataset::{Dataset, Split};
use crate::entity::{generate_entity_brief, AliasTable, EntityBrief};
use crate::index::Index;
use crate::metrics::{self, Accuracy, OutcomeRecord, RepetitionAccuracy, TimeStats};
use crate::qabrief::{QaBrief, QaBriefer};
use crate::retrieval::{generate_passage_brief, Bm25Retriever, PassageBrief};
use crate::search::{BlockFilteringRetriever, SearchProxy, DEFAULT_K};
use crate::text;
use events::{append_event, CreatedData, Event, EventKind, LogError, ReplayedSession, SearchData};

pub const MIN_JUSTIFICATION_TOKENS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    SearchOnly,
    PassageBrief,
    EntityBrief,
    QabriefGenerated,
    QabriefGold,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::SearchOnly,
        Condition::PassageBrief,
        Condition::EntityBrief,
        Condition::QabriefGenerated,
        Condition::QabriefGold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::SearchOnly => "search_only",
            Condition::PassageBrief => "passage_brief",
            Condition::EntityBrief => "entity_brief",
            Condition::QabriefGenerated => "qabrief_generated",
            Condition::QabriefGold => "qabrief_gold",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown condition `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Brief {
    Passage(PassageBrief),
    Entity(EntityBrief),
    Qa(QaBrief),
}

impl Brief {
    pub fn urls(&self) -> Vec<&str> {
        match self {
            Brief::Passage(b) => vec![b.url.as_str()],
            Brief::Entity(b) => b.entries.iter().map(|e| e.url.as_str()).collect(),
            Brief::Qa(b) => b.pairs.iter().map(|p| p.answer.evidence_url.as_str()).filter(|u| !u.is_empty()).collect(),
        }
    }
}

/// Study definition, as stored in a plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_id: Option<String>,
    /// Explicit claim ids; when empty, every claim of `split`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub claims: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub conditions: Vec<Condition>,
    pub repetitions: usize,
    pub seed: u64,
}

impl StudyPlan {
    pub fn id(&self) -> String {
        self.study_id.clone().unwrap_or_else(|| format!("study-{}", self.seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub claim_index: usize,
    pub condition: Condition,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub time: DateTime<Utc>,
    pub query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub justification: String,
    pub difficulty: Difficulty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub study_id: String,
    pub evaluator_id: String,
    pub claim_id: String,
    pub condition: Condition,
    pub repetition: usize,
    pub load_time: DateTime<Utc>,
    pub searches: Vec<SearchRecord>,
    pub verdict: Option<Verdict>,
    pub submit_time: Option<DateTime<Utc>>,
    pub abandoned: bool,
}

impl Session {
    pub fn is_open(&self) -> bool {
        self.verdict.is_none() && !self.abandoned
    }

    pub fn elapsed_seconds(&self) -> Option<f64> {
        let d = self.submit_time? - self.load_time;
        Some(d.num_microseconds()? as f64 / 1e6)
    }
}

/// What an evaluator sees of a claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimView {
    pub claim_id: String,
    pub text: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub session_id: String,
    pub study_id: String,
    pub claim: ClaimView,
    pub condition: Condition,
    pub brief: Option<Brief>,
    pub load_time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub title: String,
    pub snippet: String,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("plan has no claims")]
    NoClaims,
    #[error("plan has no conditions")]
    NoConditions,
    #[error("plan lists condition {0} twice")]
    DuplicateCondition(Condition),
    #[error("plan lists claim {0} twice")]
    DuplicateClaim(String),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("claim {0} is not in the dataset")]
    UnknownClaim(String),
    #[error("claim {0} has no gold label")]
    MissingGoldLabel(String),
    #[error("qabrief_gold requested for claim {0}, which has no annotated question/answer pairs")]
    NoGoldBrief(String),
    #[error("brief for claim {claim_id} under {condition} contains blocked url {url}")]
    BlockedUrl { claim_id: String, condition: Condition, url: String },
    #[error("study {0} already exists")]
    StudyExists(String),
}

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("unknown study {0}")]
    UnknownStudy(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("no tasks remaining for evaluator {0}")]
    NoTasksRemaining(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("justification has {0} tokens; at least 20 are required")]
    JustificationTooShort(usize),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("search failed: {0}")]
    Search(String),
    #[error("event log: {0}")]
    Log(#[from] LogError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Strictly increasing server clock at microsecond resolution.
#[derive(Debug, Default)]
pub struct Clock {
    last: Mutex<i64>,
}

impl Clock {
    pub fn now(&self) -> DateTime<Utc> {
        let mut last = self.last.lock().expect("clock lock");
        let t = Utc::now().timestamp_micros().max(*last + 1);
        *last = t;
        Utc.timestamp_micros(t).single().expect("valid timestamp")
    }
}

/// Search, corpus and dataset handles the service draws briefs from.
#[derive(Clone)]
pub struct Resources {
    pub corpus: Arc<Corpus>,
    pub index: Arc<Index>,
    pub aliases: Arc<AliasTable>,
    pub dataset: Arc<Dataset>,
    pub proxy: SearchProxy,
    pub briefer: Arc<QaBriefer>,
}

struct ClaimInfo {
    view: ClaimView,
    gold: Label,
}

struct Study {
    plan: StudyPlan,
    claims: Vec<ClaimInfo>,
    tasks: Vec<Task>,
    pending: VecDeque<usize>,
    briefs: HashMap<(usize, Condition), Brief>,
    seen: HashMap<String, HashSet<usize>>,
    session_ids: Vec<String>,
    log_path: Option<PathBuf>,
}

#[derive(Default)]
struct State {
    studies: BTreeMap<String, Study>,
    sessions: HashMap<String, (Session, usize)>,
}

pub struct Workbench {
    resources: Resources,
    state_dir: Option<PathBuf>,
    clock: Clock,
    state: Mutex<State>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub study_id: String,
    pub claims: usize,
    pub tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub study_id: String,
    pub tasks: usize,
    pub sessions_closed: usize,
    pub sessions_abandoned: usize,
    pub sessions_open: usize,
    pub accuracy: BTreeMap<String, Accuracy>,
    pub accuracy_by_repetition: BTreeMap<String, RepetitionAccuracy>,
    pub time: TimeStats,
    pub difficulty: BTreeMap<String, BTreeMap<Difficulty, Accuracy>>,
    /// Scored sessions, with gold labels; never sent to evaluators.
    #[serde(skip)]
    pub outcomes: Vec<OutcomeRecord>,
}

pub fn study_dir(state_dir: &Path, study_id: &str) -> PathBuf {
    state_dir.join("studies").join(study_id)
}

/// Analytics over the sessions recorded for a study.
pub fn report_from_sessions(study_id: &str, tasks: usize, replayed: &[ReplayedSession]) -> StudyReport {
    let outcomes = events::outcomes(replayed);
    StudyReport {
        study_id: study_id.to_string(),
        tasks,
        sessions_closed: replayed.iter().filter(|r| r.session.verdict.is_some()).count(),
        sessions_abandoned: replayed.iter().filter(|r| r.session.abandoned).count(),
        sessions_open: replayed.iter().filter(|r| r.session.is_open()).count(),
        accuracy: metrics::fact_check_accuracy(&outcomes),
        accuracy_by_repetition: metrics::accuracy_by_repetition(&outcomes),
        time: metrics::time_stats(&outcomes),
        difficulty: metrics::difficulty_table(&outcomes),
        outcomes,
    }
}

fn task_count(plan: &StudyPlan, dataset: &Dataset) -> usize {
    let claims =
        if plan.claims.is_empty() { plan.split.map_or(0, |s| dataset.split(s).count()) } else { plan.claims.len() };
    claims * plan.conditions.len() * plan.repetitions
}

/// Report built from a study's plan file and event log alone.
pub fn report_from_state(state_dir: &Path, study_id: &str, dataset: &Dataset) -> Result<StudyReport, WorkbenchError> {
    let dir = study_dir(state_dir, study_id);
    let plan_text =
        fs::read_to_string(dir.join("plan.json")).map_err(|_| WorkbenchError::UnknownStudy(study_id.to_string()))?;
    let plan: StudyPlan =
        serde_json::from_str(&plan_text).map_err(|e| WorkbenchError::InvalidRequest(e.to_string()))?;
    let replayed = events::replay(&events::read_events(dir.join("events.jsonl"))?)?;
    Ok(report_from_sessions(study_id, task_count(&plan, dataset), &replayed))
}

impl Workbench {
    pub fn new(resources: Resources) -> Self {
        Workbench { resources, state_dir: None, clock: Clock::default(), state: Mutex::new(State::default()) }
    }

    /// A workbench persisting to `state_dir`, with every study found there
    /// restored by replaying its event log.
    pub fn open(resources: Resources, state_dir: impl Into<PathBuf>) -> Result<Self, WorkbenchError> {
        let state_dir = state_dir.into();
        let wb = Workbench { state_dir: Some(state_dir.clone()), ..Workbench::new(resources) };
        let studies = state_dir.join("studies");
        if studies.is_dir() {
            let mut dirs: Vec<PathBuf> = fs::read_dir(&studies)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
            dirs.sort();
            for dir in dirs {
                let plan_path = dir.join("plan.json");
                if !plan_path.is_file() {
                    continue;
                }
                let plan: StudyPlan = serde_json::from_str(&fs::read_to_string(&plan_path)?)
                    .map_err(|e| WorkbenchError::InvalidRequest(format!("{}: {e}", plan_path.display())))?;
                let mut study = wb.plan_study(&plan)?;
                study.log_path = Some(dir.join("events.jsonl"));
                let replayed = events::replay(&events::read_events(dir.join("events.jsonl"))?)?;
                let mut state = wb.state.lock().expect("state lock");
                for r in replayed {
                    apply_replayed(&mut study, &mut state, r);
                }
                state.studies.insert(plan.id(), study);
            }
        }
        Ok(wb)
    }

    pub fn resources(&self) -> &Resources {
        &self.resources
    }

    pub fn study_ids(&self) -> Vec<String> {
        self.state.lock().expect("state lock").studies.keys().cloned().collect()
    }

    fn plan_study(&self, plan: &StudyPlan) -> Result<Study, PlanError> {
        let ds = &self.resources.dataset;
        let claim_ids: Vec<String> = if plan.claims.is_empty() {
            plan.split.map(|s| ds.split(s).map(|r| r.claim_id.clone()).collect()).unwrap_or_default()
        } else {
            plan.claims.clone()
        };
        if claim_ids.is_empty() {
            return Err(PlanError::NoClaims);
        }
        if plan.conditions.is_empty() {
            return Err(PlanError::NoConditions);
        }
        if plan.repetitions == 0 {
            return Err(PlanError::NoRepetitions);
        }
        let mut conds = HashSet::new();
        for c in &plan.conditions {
            if !conds.insert(*c) {
                return Err(PlanError::DuplicateCondition(*c));
            }
        }
        let mut ids = HashSet::new();
        let mut claims = Vec::new();
        let mut records = Vec::new();
        for id in &claim_ids {
            if !ids.insert(id.as_str()) {
                return Err(PlanError::DuplicateClaim(id.clone()));
            }
            let rec = ds.get(id).ok_or_else(|| PlanError::UnknownClaim(id.clone()))?;
            let gold = rec.label.ok_or_else(|| PlanError::MissingGoldLabel(id.clone()))?;
            claims.push(ClaimInfo {
                view: ClaimView { claim_id: rec.claim_id.clone(), text: rec.claim.clone(), source: rec.source.clone() },
                gold,
            });
            records.push(rec);
        }

        let mut briefs = HashMap::new();
        for (i, rec) in records.iter().enumerate() {
            let claim = rec.to_claim();
            for &cond in &plan.conditions {
                let brief = match cond {
                    Condition::SearchOnly => None,
                    Condition::PassageBrief => {
                        let retriever = BlockFilteringRetriever {
                            inner: Bm25Retriever::default(),
                            blocklist: self.resources.proxy.blocklist().clone(),
                        };
                        match generate_passage_brief(&claim, &self.resources.index, &retriever) {
                            Ok(b) => Some(Brief::Passage(b)),
                            Err(e) => {
                                log::warn!("{e}; session will carry no brief");
                                None
                            }
                        }
                    }
                    Condition::EntityBrief => {
                        match generate_entity_brief(&claim, &self.resources.aliases, &self.resources.corpus) {
                            Ok(mut b) => {
                                b.entries.retain(|e| !self.resources.proxy.blocklist().is_blocked(&e.url));
                                Some(Brief::Entity(b))
                            }
                            Err(e) => {
                                log::warn!("entity brief for {}: {e}", claim.claim_id);
                                None
                            }
                        }
                    }
                    Condition::QabriefGenerated => Some(Brief::Qa(self.resources.briefer.generate_qabrief(&claim))),
                    Condition::QabriefGold => {
                        let b = rec.gold_brief();
                        if b.pairs.is_empty() {
                            return Err(PlanError::NoGoldBrief(rec.claim_id.clone()));
                        }
                        Some(Brief::Qa(b))
                    }
                };
                if let Some(brief) = brief {
                    if let Some(url) = brief.urls().into_iter().find(|u| self.resources.proxy.blocklist().is_blocked(u))
                    {
                        return Err(PlanError::BlockedUrl {
                            claim_id: rec.claim_id.clone(),
                            condition: cond,
                            url: url.to_string(),
                        });
                    }
                    briefs.insert((i, cond), brief);
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let mut tasks = Vec::new();
        for repetition in 0..plan.repetitions {
            let mut round: Vec<Task> = (0..claims.len())
                .flat_map(|claim_index| {
                    plan.conditions.iter().map(move |&condition| Task { claim_index, condition, repetition })
                })
                .collect();
            round.shuffle(&mut rng);
            tasks.extend(round);
        }
        Ok(Study {
            plan: plan.clone(),
            claims,
            pending: (0..tasks.len()).collect(),
            tasks,
            briefs,
            seen: HashMap::new(),
            session_ids: Vec::new(),
            log_path: None,
        })
    }

    pub fn create_study(&self, plan: &StudyPlan) -> Result<StudySummary, WorkbenchError> {
        let id = plan.id();
        if self.state.lock().expect("state lock").studies.contains_key(&id) {
            return Err(PlanError::StudyExists(id).into());
        }
        let mut study = self.plan_study(plan)?;
        if let Some(dir) = &self.state_dir {
            let dir = study_dir(dir, &id);
            if dir.join("plan.json").exists() {
                return Err(PlanError::StudyExists(id).into());
            }
            fs::create_dir_all(&dir)?;
            let json = serde_json::to_string_pretty(plan).map_err(std::io::Error::other)?;
            fs::write(dir.join("plan.json"), json + "\n")?;
            study.log_path = Some(dir.join("events.jsonl"));
        }
        let summary = StudySummary { study_id: id.clone(), claims: study.claims.len(), tasks: study.tasks.len() };
        let mut state = self.state.lock().expect("state lock");
        if state.studies.contains_key(&id) {
            return Err(PlanError::StudyExists(id).into());
        }
        state.studies.insert(id, study);
        Ok(summary)
    }

    fn payload(study: &Study, session: &Session, task: usize) -> TaskPayload {
        let t = study.tasks[task];
        TaskPayload {
            session_id: session.session_id.clone(),
            study_id: session.study_id.clone(),
            claim: study.claims[t.claim_index].view.clone(),
            condition: t.condition,
            brief: study.briefs.get(&(t.claim_index, t.condition)).cloned(),
            load_time: session.load_time,
        }
    }

    fn log(&self, study: &Study, event: &Event) -> Result<(), WorkbenchError> {
        if let Some(path) = &study.log_path {
            append_event(path, event)?;
        }
        Ok(())
    }

    /// Assigns the next task whose claim the evaluator has not yet seen.
    pub fn start_session(&self, study_id: &str, evaluator_id: &str) -> Result<TaskPayload, WorkbenchError> {
        if evaluator_id.trim().is_empty() {
            return Err(WorkbenchError::InvalidRequest("evaluator_id is empty".into()));
        }
        let mut guard = self.state.lock().expect("state lock");
        let state = &mut *guard;
        let study = state.studies.get_mut(study_id).ok_or_else(|| WorkbenchError::UnknownStudy(study_id.into()))?;
        let seen = study.seen.get(evaluator_id);
        let pos = study
            .pending
            .iter()
            .position(|&t| seen.is_none_or(|s| !s.contains(&study.tasks[t].claim_index)))
            .ok_or_else(|| WorkbenchError::NoTasksRemaining(evaluator_id.into()))?;
        let task = study.pending[pos];
        let t = study.tasks[task];
        let session_id = format!("{study_id}-{:04}", study.session_ids.len() + 1);
        let load_time = self.clock.now();
        let created = CreatedData {
            study_id: study_id.to_string(),
            evaluator_id: evaluator_id.to_string(),
            claim_id: study.claims[t.claim_index].view.claim_id.clone(),
            condition: t.condition,
            repetition: t.repetition,
            task,
            gold_label: study.claims[t.claim_index].gold,
        };
        let event = Event {
            session_id: session_id.clone(),
            kind: EventKind::Created,
            time: load_time,
            data: serde_json::to_value(&created).expect("serializable"),
        };
        self.log(study, &event)?;
        let session = Session {
            session_id: session_id.clone(),
            study_id: study_id.to_string(),
            evaluator_id: evaluator_id.to_string(),
            claim_id: created.claim_id,
            condition: t.condition,
            repetition: t.repetition,
            load_time,
            searches: Vec::new(),
            verdict: None,
            submit_time: None,
            abandoned: false,
        };
        study.pending.remove(pos);
        study.seen.entry(evaluator_id.to_string()).or_default().insert(t.claim_index);
        study.session_ids.push(session_id.clone());
        let payload = Self::payload(study, &session, task);
        state.sessions.insert(session_id, (session, task));
        Ok(payload)
    }

    /// The payload of an existing session, unchanged since it was started.
    pub fn session_payload(&self, session_id: &str) -> Result<TaskPayload, WorkbenchError> {
        let state = self.state.lock().expect("state lock");
        let (session, task) =
            state.sessions.get(session_id).ok_or_else(|| WorkbenchError::UnknownSession(session_id.into()))?;
        let study = &state.studies[&session.study_id];
        Ok(Self::payload(study, session, *task))
    }

    pub fn session(&self, session_id: &str) -> Result<Session, WorkbenchError> {
        let state = self.state.lock().expect("state lock");
        state
            .sessions
            .get(session_id)
            .map(|(s, _)| s.clone())
            .ok_or_else(|| WorkbenchError::UnknownSession(session_id.into()))
    }

    fn open_session(&self, session_id: &str) -> Result<(), WorkbenchError> {
        let s = self.session(session_id)?;
        if s.is_open() {
            Ok(())
        } else {
            Err(WorkbenchError::SessionClosed(session_id.into()))
        }
    }

    /// Applies a closing or search event to an open session under the lock.
    fn record(
        &self,
        session_id: &str,
        kind: EventKind,
        data: serde_json::Value,
        apply: impl FnOnce(&mut Session, DateTime<Utc>),
    ) -> Result<Session, WorkbenchError> {
        let mut guard = self.state.lock().expect("state lock");
        let state = &mut *guard;
        let (session, task) =
            state.sessions.get_mut(session_id).ok_or_else(|| WorkbenchError::UnknownSession(session_id.into()))?;
        if !session.is_open() {
            return Err(WorkbenchError::SessionClosed(session_id.into()));
        }
        let study = state.studies.get_mut(&session.study_id).expect("session study exists");
        let time = self.clock.now();
        let event = Event { session_id: session_id.to_string(), kind, time, data };
        self.log(study, &event)?;
        apply(session, time);
        if session.abandoned {
            study.pending.push_front(*task);
        }
        Ok(session.clone())
    }

    /// Runs a query through the blocklisted proxy and records it against the
    /// session.
    pub fn record_search(&self, session_id: &str, query: &str) -> Result<Vec<SearchHit>, WorkbenchError> {
        self.open_session(session_id)?;
        let results =
            self.resources.proxy.search(query, DEFAULT_K).map_err(|e| WorkbenchError::Search(e.to_string()))?;
        let q = query.to_string();
        self.record(
            session_id,
            EventKind::Search,
            serde_json::to_value(SearchData { query: q.clone() }).expect("serializable"),
            |s, time| s.searches.push(SearchRecord { time, query: q }),
        )?;
        Ok(results.into_iter().map(|r| SearchHit { url: r.url, title: r.title, snippet: r.snippet }).collect())
    }

    pub fn submit_verdict(&self, session_id: &str, verdict: Verdict) -> Result<Session, WorkbenchError> {
        let n = text::token_count(&verdict.justification);
        if n < MIN_JUSTIFICATION_TOKENS {
            self.open_session(session_id)?;
            return Err(WorkbenchError::JustificationTooShort(n));
        }
        let data = serde_json::to_value(&verdict).expect("serializable");
        self.record(session_id, EventKind::Submit, data, |s, time| {
            s.verdict = Some(verdict);
            s.submit_time = Some(time);
        })
    }

    /// Closes a session without a verdict; its task returns to the queue.
    pub fn abandon(&self, session_id: &str) -> Result<Session, WorkbenchError> {
        self.record(session_id, EventKind::Abandon, serde_json::json!({}), |s, _| s.abandoned = true)
    }

    pub fn study_report(&self, study_id: &str) -> Result<StudyReport, WorkbenchError> {
        let state = self.state.lock().expect("state lock");
        let study = state.studies.get(study_id).ok_or_else(|| WorkbenchError::UnknownStudy(study_id.into()))?;
        let replayed: Vec<ReplayedSession> = study
            .session_ids
            .iter()
            .map(|id| {
                let (session, task) = &state.sessions[id];
                ReplayedSession {
                    session: session.clone(),
                    task: *task,
                    gold_label: study.claims[study.tasks[*task].claim_index].gold,
                }
            })
            .collect();
        Ok(report_from_sessions(study_id, study.tasks.len(), &replayed))
    }

    pub fn plan(&self, study_id: &str) -> Result<StudyPlan, WorkbenchError> {
        let state = self.state.lock().expect("state lock");
        state.studies.get(study_id).map(|s| s.plan.clone()).ok_or_else(|| WorkbenchError::UnknownStudy(study_id.into()))
    }

    /// Tasks not yet assigned or returned by abandonment.
    pub fn pending_tasks(&self, study_id: &str) -> Result<usize, WorkbenchError> {
        let state = self.state.lock().expect("state lock");
        state
            .studies
            .get(study_id)
            .map(|s| s.pending.len())
            .ok_or_else(|| WorkbenchError::UnknownStudy(study_id.into()))
    }
}

fn apply_replayed(study: &mut Study, state: &mut State, r: ReplayedSession) {
    let claim_index = study.tasks.get(r.task).map(|t| t.claim_index);
    if let Some(pos) = study.pending.iter().position(|&t| t == r.task) {
        study.pending.remove(pos);
    }
    if r.session.abandoned {
        study.pending.push_front(r.task);
    }
    if let Some(ci) = claim_index {
        study.seen.entry(r.session.evaluator_id.clone()).or_default().insert(ci);
    }
    study.session_ids.push(r.session.session_id.clone());
    state.sessions.insert(r.session.session_id.clone(), (r.session, r.task));
}
