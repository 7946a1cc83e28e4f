//! Model-backend contracts and the line-delimited JSON wire protocol.
//!
//! Each request is one JSON object on one line, sent over a fresh TCP
//! connection; the backend answers with one JSON line and may close.
//!
//! ```text
//! {"kind":"qg","claim_id":..,"claim":..,"source":..,"mode":"iterative","previous_questions":[..]}
//!   -> {"question":".."} | {"end":true} | {"questions":[..]} | {"error":".."}
//! {"kind":"qa","claim_id":..,"qid":..,"question":..,"evidence":..}
//!   -> {"answer_type":"extractive"|"abstractive"|"no_answer","text":".."} | {"error":".."}
//! ```
//!
//! `questions` is the reply to the single call made in `claim_only` and
//! `claim_source` modes; iterative mode gets one `question` per call until
//! `end`.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnswerType, QgMode};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("backend closed the connection without replying")]
    ConnectionDropped,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend reported: {0}")]
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QgRequest {
    pub claim_id: String,
    pub claim: String,
    pub source: String,
    pub mode: QgMode,
    pub previous_questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRequest {
    pub claim_id: String,
    pub qid: usize,
    pub question: String,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Request {
    Qg(QgRequest),
    Qa(QaRequest),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QgReply {
    Question(String),
    Questions(Vec<String>),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaReply {
    pub answer_type: AnswerType,
    pub text: String,
}

/// Every reply shape, as it appears on the wire.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub questions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub end: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_type: Option<AnswerType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl WireReply {
    pub fn question(q: impl Into<String>) -> Self {
        WireReply { question: Some(q.into()), ..Default::default() }
    }

    pub fn questions(qs: Vec<String>) -> Self {
        WireReply { questions: Some(qs), ..Default::default() }
    }

    pub fn end() -> Self {
        WireReply { end: true, ..Default::default() }
    }

    pub fn answer(answer_type: AnswerType, text: impl Into<String>) -> Self {
        WireReply { answer_type: Some(answer_type), text: Some(text.into()), ..Default::default() }
    }

    pub fn error(msg: impl Into<String>) -> Self {
        WireReply { error: Some(msg.into()), ..Default::default() }
    }

    pub fn into_qg(self) -> Result<QgReply, BackendError> {
        if let Some(e) = self.error {
            return Err(BackendError::Remote(e));
        }
        match (self.question, self.questions, self.end, self.answer_type, self.text) {
            (Some(q), None, false, None, None) => Ok(QgReply::Question(q)),
            (None, Some(qs), false, None, None) => Ok(QgReply::Questions(qs)),
            (None, None, true, None, None) => Ok(QgReply::End),
            _ => {
                Err(BackendError::Protocol("question reply must carry exactly one of question, questions, end".into()))
            }
        }
    }

    pub fn into_qa(self) -> Result<QaReply, BackendError> {
        if let Some(e) = self.error {
            return Err(BackendError::Remote(e));
        }
        match (self.question, self.questions, self.end, self.answer_type, self.text) {
            (None, None, false, Some(answer_type), Some(text)) => Ok(QaReply { answer_type, text }),
            _ => Err(BackendError::Protocol("answer reply must carry answer_type and text only".into())),
        }
    }
}

/// Question generation contract.
pub trait QuestionGenerator: Send + Sync {
    fn id(&self) -> &str;
    fn generate(&self, request: &QgRequest) -> Result<QgReply, BackendError>;
}

/// Question answering contract.
pub trait Answerer: Send + Sync {
    fn id(&self) -> &str;
    fn answer(&self, request: &QaRequest) -> Result<QaReply, BackendError>;
}

/// Client for a backend speaking the wire protocol on a TCP address.
#[derive(Debug, Clone)]
pub struct WireBackend {
    addr: String,
    timeout: Duration,
    name: String,
}

impl WireBackend {
    pub fn new(addr: impl Into<String>) -> Self {
        let addr = addr.into();
        WireBackend { name: format!("wire:{addr}"), addr, timeout: DEFAULT_TIMEOUT }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn call(&self, request: &Request) -> Result<WireReply, BackendError> {
        let addr = self
            .addr
            .to_socket_addrs()
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", self.addr)))?
            .next()
            .ok_or_else(|| BackendError::Unavailable(format!("{}: no address", self.addr)))?;
        let stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(|e| self.io_error(e))?;
        stream.set_read_timeout(Some(self.timeout)).map_err(|e| self.io_error(e))?;
        stream.set_write_timeout(Some(self.timeout)).map_err(|e| self.io_error(e))?;

        let mut line = serde_json::to_string(request).map_err(|e| BackendError::Protocol(e.to_string()))?;
        line.push('\n');
        (&stream).write_all(line.as_bytes()).map_err(|e| self.io_error(e))?;

        let mut reply = String::new();
        let n = BufReader::new(&stream).read_line(&mut reply).map_err(|e| self.io_error(e))?;
        if n == 0 {
            return Err(BackendError::ConnectionDropped);
        }
        serde_json::from_str(reply.trim_end()).map_err(|e| BackendError::Protocol(e.to_string()))
    }

    fn io_error(&self, e: std::io::Error) -> BackendError {
        use std::io::ErrorKind::*;
        match e.kind() {
            TimedOut | WouldBlock => BackendError::Timeout(self.timeout),
            ConnectionReset | ConnectionAborted | BrokenPipe | UnexpectedEof => BackendError::ConnectionDropped,
            _ => BackendError::Unavailable(format!("{}: {e}", self.addr)),
        }
    }
}

impl QuestionGenerator for WireBackend {
    fn id(&self) -> &str {
        &self.name
    }

    fn generate(&self, request: &QgRequest) -> Result<QgReply, BackendError> {
        self.call(&Request::Qg(request.clone()))?.into_qg()
    }
}

impl Answerer for WireBackend {
    fn id(&self) -> &str {
        &self.name
    }

    fn answer(&self, request: &QaRequest) -> Result<QaReply, BackendError> {
        self.call(&Request::Qa(request.clone()))?.into_qa()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let req = Request::Qg(QgRequest {
            claim_id: "c1".into(),
            claim: "A claim".into(),
            source: "Someone".into(),
            mode: QgMode::Iterative,
            previous_questions: vec!["Q1?".into()],
        });
        let json = serde_json::to_string(&req).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"qg","claim_id":"c1","claim":"A claim","source":"Someone","mode":"iterative","previous_questions":["Q1?"]}"#
        );
        assert_eq!(serde_json::from_str::<Request>(&json).unwrap(), req);
    }

    #[test]
    fn reply_shapes() {
        assert_eq!(serde_json::to_string(&WireReply::end()).unwrap(), r#"{"end":true}"#);
        let r: WireReply = serde_json::from_str(r#"{"end":true}"#).unwrap();
        assert_eq!(r.into_qg().unwrap(), QgReply::End);
        let r: WireReply = serde_json::from_str(r#"{"question":"Who?","end":true}"#).unwrap();
        assert!(matches!(r.into_qg(), Err(BackendError::Protocol(_))));
        let r: WireReply = serde_json::from_str(r#"{"answer_type":"no_answer","text":"x"}"#).unwrap();
        assert_eq!(r.into_qa().unwrap().answer_type, AnswerType::NoAnswer);
        assert!(serde_json::from_str::<WireReply>(r#"{"bogus":1}"#).is_err());
        let r: WireReply = serde_json::from_str(r#"{"error":"boom"}"#).unwrap();
        assert_eq!(r.into_qa(), Err(BackendError::Remote("boom".into())));
    }

    #[test]
    fn unreachable_backend_is_unavailable() {
        // bind then drop to get a port nobody listens on
        let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let client = WireBackend::new(format!("127.0.0.1:{port}")).with_timeout(Duration::from_millis(500));
        let req = QaRequest { claim_id: "c".into(), qid: 1, question: "q".into(), evidence: "e".into() };
        assert!(matches!(client.answer(&req), Err(BackendError::Unavailable(_))));
    }
}
