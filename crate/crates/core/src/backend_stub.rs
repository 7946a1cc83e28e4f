//! Reference backend that replays scripted replies over the wire protocol
//! and injects faults.
//!
//! Script files are line-delimited JSON:
//!
//! ```text
//! {"key":"c1","responses":[{"question":"..."},{"end":true}],"faults":{}}
//! {"key":"c1#2","responses":[{"answer_type":"extractive","text":"..."}],"faults":{"delay_ms":2000}}
//! ```
//!
//! Question requests are keyed by claim id; an iterative request receives
//! the response at position `previous_questions.len()`. Answer requests are
//! keyed by `claim_id#qid` and receive the first response.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qabrief::backend::{Request, WireReply};
use crate::qabrief::{AnswerType, QgMode};

#[derive(Debug, Error)]
pub enum StubError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Faults {
    #[serde(default)]
    pub delay_ms: u64,
    #[serde(default)]
    pub violate_invariant: bool,
    #[serde(default)]
    pub drop_connection: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    pub key: String,
    #[serde(default)]
    pub responses: Vec<WireReply>,
    #[serde(default)]
    pub faults: Faults,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureScript {
    entries: HashMap<String, FixtureEntry>,
}

impl FixtureScript {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        FixtureScript { entries: entries.into_iter().map(|e| (e.key.clone(), e)).collect() }
    }

    pub fn parse(contents: &str) -> Result<Self, StubError> {
        let mut entries = Vec::new();
        for (i, line) in contents.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureEntry =
                serde_json::from_str(line).map_err(|e| StubError::Script { line: i + 1, message: e.to_string() })?;
            entries.push(entry);
        }
        Ok(FixtureScript::new(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StubError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn entry(&self, key: &str) -> Option<&FixtureEntry> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The reply for a request, or `None` when the connection is to be
    /// dropped. Also returns the delay to apply first.
    pub fn respond(&self, request: &Request) -> (Duration, Option<WireReply>) {
        let (key, position) = match request {
            Request::Qg(r) => {
                let pos = if r.mode == QgMode::Iterative { r.previous_questions.len() } else { 0 };
                (r.claim_id.clone(), pos)
            }
            Request::Qa(r) => (format!("{}#{}", r.claim_id, r.qid), 0),
        };
        let Some(entry) = self.entries.get(&key) else {
            return (Duration::ZERO, Some(WireReply::error(format!("unscripted key {key}"))));
        };
        let delay = Duration::from_millis(entry.faults.delay_ms);
        if entry.faults.drop_connection {
            return (delay, None);
        }
        if entry.faults.violate_invariant {
            let reply = match request {
                Request::Qg(r) if r.mode == QgMode::Iterative => WireReply::question("Is that really true?"),
                Request::Qg(_) => WireReply::questions(vec!["Is that really true?".into(), "Who said it?".into()]),
                Request::Qa(_) => WireReply::answer(AnswerType::Abstractive, "Probably not."),
            };
            return (delay, Some(reply));
        }
        let reply = entry
            .responses
            .get(position)
            .cloned()
            .unwrap_or_else(|| WireReply::error(format!("script for {key} has no response {position}")));
        (delay, Some(reply))
    }
}

/// A running stub; stops accepting connections when dropped.
pub struct StubHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl StubHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for StubHandle {
    fn drop(&mut self) {
        self.stop_now();
    }
}

pub fn serve_fixtures(script: FixtureScript, bind: &str) -> Result<StubHandle, StubError> {
    let listener = TcpListener::bind(bind)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let script = Arc::new(script);
    let flag = Arc::clone(&stop);
    let thread = thread::spawn(move || {
        while !flag.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let script = Arc::clone(&script);
                    thread::spawn(move || {
                        if let Err(e) = handle(stream, &script) {
                            log::debug!("stub connection error: {e}");
                        }
                    });
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
                Err(e) => {
                    log::warn!("stub accept failed: {e}");
                    thread::sleep(Duration::from_millis(5));
                }
            }
        }
    });
    Ok(StubHandle { addr, stop, thread: Some(thread) })
}

fn handle(stream: TcpStream, script: &FixtureScript) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    let mut line = String::new();
    BufReader::new(&stream).read_line(&mut line)?;
    let (delay, reply) = match serde_json::from_str::<Request>(line.trim_end()) {
        Ok(request) => script.respond(&request),
        Err(e) => (Duration::ZERO, Some(WireReply::error(format!("malformed request: {e}")))),
    };
    thread::sleep(delay);
    let Some(reply) = reply else {
        return stream.shutdown(std::net::Shutdown::Both);
    };
    let mut out = serde_json::to_string(&reply).expect("reply serializes");
    out.push('\n');
    (&stream).write_all(out.as_bytes())
}
