//! Document corpus: ingestion from line-delimited records and segmentation
//! into passages of at most [`DEFAULT_MAX_TOKENS`] tokens.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{self, Span};

pub const DEFAULT_MAX_TOKENS: usize = 500;

/// Separator placed between paragraphs when forming a document body.
pub const PARAGRAPH_SEPARATOR: &str = "\n\n";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: field `{field}`: {message}")]
    Malformed { line: usize, field: String, message: String },
    #[error("duplicate doc_id `{0}`")]
    DuplicateId(String),
    #[error("corpus is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub title: String,
    pub url: String,
    pub paragraphs: Vec<String>,
}

impl Document {
    pub fn lead(&self) -> &str {
        &self.paragraphs[0]
    }

    /// Paragraphs joined with [`PARAGRAPH_SEPARATOR`].
    pub fn body(&self) -> String {
        self.paragraphs.join(PARAGRAPH_SEPARATOR)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub passage_index: usize,
    pub tokens: Vec<String>,
    pub text: String,
}

/// A unit of segmentation: byte range within the body plus its token count.
struct Unit {
    range: Range<usize>,
    tokens: usize,
}

/// Splits a document into passages.
///
/// Whole paragraphs are packed greedily. A paragraph longer than `max_tokens`
/// is broken into sentences first, and any sentence still over the cap is
/// hard-split every `max_tokens` tokens. Passage texts are contiguous slices
/// of [`Document::body`]; concatenating them in order yields the body.
pub fn segment(doc: &Document, max_tokens: usize) -> Vec<Passage> {
    assert!(max_tokens >= 1, "max_tokens must be at least 1");
    let body = doc.body();
    let spans = text::tokenize_spans(&body);

    let mut units = Vec::new();
    let mut offset = 0;
    for (i, para) in doc.paragraphs.iter().enumerate() {
        let sep = if i + 1 < doc.paragraphs.len() { PARAGRAPH_SEPARATOR.len() } else { 0 };
        let range = offset..offset + para.len() + sep;
        split_unit(&body, range, &spans, max_tokens, &mut units);
        offset += para.len() + sep;
    }

    let mut starts = Vec::new();
    let mut current = 0usize;
    for (i, unit) in units.iter().enumerate() {
        if i == 0 || current + unit.tokens > max_tokens {
            starts.push(unit.range.start);
            current = 0;
        }
        current += unit.tokens;
    }

    let mut passages = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let start = if i == 0 { 0 } else { start };
        let end = starts.get(i + 1).copied().unwrap_or(body.len());
        let slice = &body[start..end];
        passages.push(Passage {
            doc_id: doc.doc_id.clone(),
            passage_index: i,
            tokens: text::tokenize(slice),
            text: slice.to_string(),
        });
    }
    passages
}

fn tokens_in(spans: &[Span], range: &Range<usize>) -> Range<usize> {
    let lo = spans.partition_point(|s| s.range.start < range.start);
    let hi = spans.partition_point(|s| s.range.start < range.end);
    lo..hi
}

fn split_unit(body: &str, range: Range<usize>, spans: &[Span], max: usize, out: &mut Vec<Unit>) {
    let idx = tokens_in(spans, &range);
    if idx.len() <= max {
        out.push(Unit { tokens: idx.len(), range });
        return;
    }
    for sent in text::sentence_ranges(&body[range.clone()]) {
        let sent = range.start + sent.start..range.start + sent.end;
        let sidx = tokens_in(spans, &sent);
        if sidx.len() <= max {
            out.push(Unit { tokens: sidx.len(), range: sent });
            continue;
        }
        let mut chunk_start = sent.start;
        let mut k = sidx.start;
        while k < sidx.end {
            let take = max.min(sidx.end - k);
            let chunk_end = if k + take < sidx.end { spans[k + take].range.start } else { sent.end };
            out.push(Unit { tokens: take, range: chunk_start..chunk_end });
            chunk_start = chunk_end;
            k += take;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub passages: usize,
    pub tokens: usize,
}

/// An ingested corpus: documents plus their passages, immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    passages: Vec<Passage>,
    max_tokens: usize,
}

impl Corpus {
    pub fn from_documents(docs: Vec<Document>) -> Result<Self, CorpusError> {
        Self::with_max_tokens(docs, DEFAULT_MAX_TOKENS)
    }

    pub fn with_max_tokens(docs: Vec<Document>, max_tokens: usize) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(d.doc_id.clone()));
            }
        }
        let passages = docs.iter().flat_map(|d| segment(d, max_tokens)).collect();
        Ok(Corpus { docs, by_id, passages, max_tokens })
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            documents: self.docs.len(),
            passages: self.passages.len(),
            tokens: self.passages.iter().map(|p| p.tokens.len()).sum(),
        }
    }
}

pub fn ingest_corpus(path: impl AsRef<Path>) -> Result<(Corpus, CorpusStats), CorpusError> {
    let file = File::open(path.as_ref())?;
    let docs = read_documents(BufReader::new(file))?;
    let corpus = Corpus::from_documents(docs)?;
    let stats = corpus.stats();
    Ok((corpus, stats))
}

pub fn read_documents(reader: impl BufRead) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(parse_document(&line, i + 1)?);
    }
    Ok(docs)
}

fn parse_document(line: &str, line_no: usize) -> Result<Document, CorpusError> {
    let malformed =
        |field: &str, message: String| CorpusError::Malformed { line: line_no, field: field.to_string(), message };
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| malformed("<record>", e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed("<record>", "record must be an object".into()))?;
    let string_field = |name: &str| -> Result<String, CorpusError> {
        match obj.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(malformed(name, "must be a string".into())),
            None => Err(malformed(name, "missing".into())),
        }
    };
    let doc_id = string_field("id")?;
    if doc_id.is_empty() {
        return Err(malformed("id", "must be non-empty".into()));
    }
    let title = string_field("title")?;
    if title.trim().is_empty() {
        return Err(malformed("title", "must be non-empty".into()));
    }
    let url = string_field("url")?;
    let paragraphs = match obj.get("paragraphs") {
        Some(serde_json::Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| malformed("paragraphs", "must contain only strings".into()))?,
        Some(_) => return Err(malformed("paragraphs", "must be an array".into())),
        None => return Err(malformed("paragraphs", "missing".into())),
    };
    if paragraphs.is_empty() || paragraphs.iter().any(|p| p.is_empty()) {
        return Err(malformed("paragraphs", "must be a non-empty list of non-empty strings".into()));
    }
    Ok(Document { doc_id, title, url, paragraphs })
}
