//! Search proxy: the only route from the pipeline or an evaluator to search
//! results. Results from any engine pass through the domain blocklist.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::index::Index;
use crate::retrieval::{self, Bm25Params, Ranked, Retriever};
use crate::text;

pub const SNIPPET_TOKENS: usize = 50;
pub const DEFAULT_K: usize = 10;

pub const DEFAULT_BLOCKED: &[&str] = &["politifact.com", "factcheck.org", "snopes.com", "datacommons.org"];

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("query has no searchable tokens")]
    InvalidQuery,
    #[error("search engine failure: {0}")]
    Engine(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocklist {
    suffixes: BTreeSet<String>,
}

impl Default for Blocklist {
    fn default() -> Self {
        Blocklist::new(DEFAULT_BLOCKED.iter().copied())
    }
}

impl Blocklist {
    pub fn new<'a>(suffixes: impl IntoIterator<Item = &'a str>) -> Self {
        Blocklist {
            suffixes: suffixes
                .into_iter()
                .map(|s| s.trim().trim_start_matches('.').to_ascii_lowercase())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    /// One suffix per line; `#` starts a comment.
    pub fn parse(contents: &str) -> Self {
        Blocklist::new(contents.lines().map(|l| l.split('#').next().unwrap_or("").trim()))
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn suffixes(&self) -> impl Iterator<Item = &str> {
        self.suffixes.iter().map(String::as_str)
    }

    /// True when the url's host equals a blocked suffix or is a subdomain of
    /// one. Urls without a parseable host are treated as blocked.
    pub fn is_blocked(&self, url: &str) -> bool {
        let Ok(parsed) = Url::parse(url) else {
            return true;
        };
        let Some(host) = parsed.host_str() else {
            return true;
        };
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        self.suffixes.iter().any(|s| {
            host == *s
                || (host.len() > s.len() && host.ends_with(s.as_str()) && host[..host.len() - s.len()].ends_with('.'))
        })
    }
}

pub fn is_blocked(url: &str, blocklist: &Blocklist) -> bool {
    blocklist.is_blocked(url)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub score: f64,
    pub doc_id: String,
}

/// A search backend. `admit` tells the engine which urls may be returned so
/// it can filter before truncating to `k`.
pub trait SearchEngine: Send + Sync {
    fn id(&self) -> &str;
    fn search(&self, query: &str, k: usize, admit: &dyn Fn(&str) -> bool) -> Result<Vec<SearchResult>, SearchError>;
    /// Full text of a hit's document, if the engine can provide it.
    fn document_text(&self, hit: &SearchResult) -> Option<String>;
}

/// BM25 over the local passage index, scored per document as the maximum
/// over that document's passages.
#[derive(Debug, Clone)]
pub struct LocalEngine {
    index: Arc<Index>,
    params: Bm25Params,
}

impl LocalEngine {
    pub fn new(index: Arc<Index>) -> Self {
        LocalEngine { index, params: Bm25Params::default() }
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    /// Documents with positive score, best first, ties to the smaller doc_id.
    /// Each entry carries the document's best passage.
    pub fn rank_documents(&self, query: &[String]) -> Vec<(String, f64, usize)> {
        let mut best: HashMap<&str, (f64, usize)> = HashMap::new();
        for (pref, score) in retrieval::bm25_scores(query, &self.index, self.params) {
            if score <= 0.0 {
                continue;
            }
            let entry = self.index.passage(pref);
            let slot = best.entry(entry.doc_id.as_str()).or_insert((score, pref));
            let cur = self.index.passage(slot.1).passage_index;
            if score > slot.0 || (score == slot.0 && entry.passage_index < cur) {
                *slot = (score, pref);
            }
        }
        let mut docs: Vec<(String, f64, usize)> = best.into_iter().map(|(d, (s, p))| (d.to_string(), s, p)).collect();
        docs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        docs
    }
}

/// Text of the densest window of at most [`SNIPPET_TOKENS`] tokens, by count
/// of query-term occurrences; earliest window wins ties.
pub fn snippet(text: &str, query: &HashSet<&str>) -> String {
    let spans = text::tokenize_spans(text);
    if spans.is_empty() {
        return String::new();
    }
    let width = SNIPPET_TOKENS.min(spans.len());
    let hit: Vec<usize> = spans.iter().map(|s| query.contains(s.token.as_str()) as usize).collect();
    let mut count: usize = hit[..width].iter().sum();
    let (mut best, mut best_start) = (count, 0);
    for start in 1..=spans.len() - width {
        count = count + hit[start + width - 1] - hit[start - 1];
        if count > best {
            best = count;
            best_start = start;
        }
    }
    text[spans[best_start].range.start..spans[best_start + width - 1].range.end].to_string()
}

impl SearchEngine for LocalEngine {
    fn id(&self) -> &str {
        "local-bm25"
    }

    fn search(&self, query: &str, k: usize, admit: &dyn Fn(&str) -> bool) -> Result<Vec<SearchResult>, SearchError> {
        let tokens = text::tokenize(query);
        if tokens.is_empty() {
            return Err(SearchError::InvalidQuery);
        }
        let terms: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        let mut out = Vec::new();
        for (doc_id, score, pref) in self.rank_documents(&tokens) {
            if out.len() == k {
                break;
            }
            let Some(meta) = self.index.doc_meta(&doc_id) else { continue };
            if !admit(&meta.url) {
                continue;
            }
            out.push(SearchResult {
                url: meta.url.clone(),
                title: meta.title.clone(),
                snippet: snippet(&self.index.passage(pref).text, &terms),
                score,
                doc_id,
            });
        }
        Ok(out)
    }

    fn document_text(&self, hit: &SearchResult) -> Option<String> {
        self.index.doc_text(&hit.doc_id)
    }
}

/// Blocklist-enforcing front for a [`SearchEngine`].
#[derive(Clone)]
pub struct SearchProxy {
    engine: Arc<dyn SearchEngine>,
    blocklist: Arc<Blocklist>,
}

impl SearchProxy {
    pub fn new(engine: Arc<dyn SearchEngine>, blocklist: Blocklist) -> Self {
        SearchProxy { engine, blocklist: Arc::new(blocklist) }
    }

    pub fn local(index: Arc<Index>, blocklist: Blocklist) -> Self {
        Self::new(Arc::new(LocalEngine::new(index)), blocklist)
    }

    pub fn blocklist(&self) -> &Blocklist {
        &self.blocklist
    }

    pub fn engine_id(&self) -> &str {
        self.engine.id()
    }

    pub fn search(&self, query: &str, k: usize) -> Result<Vec<SearchResult>, SearchError> {
        if text::tokenize(query).is_empty() {
            return Err(SearchError::InvalidQuery);
        }
        let bl = &self.blocklist;
        let mut results = self.engine.search(query, k, &|url| !bl.is_blocked(url))?;
        // engines are not trusted to honor `admit`
        results.retain(|r| !bl.is_blocked(&r.url));
        results.truncate(k);
        Ok(results)
    }

    pub fn document_text(&self, hit: &SearchResult) -> Option<String> {
        if self.blocklist.is_blocked(&hit.url) {
            return None;
        }
        self.engine.document_text(hit)
    }
}

/// Passage ranker that drops passages from blocked documents.
pub struct BlockFilteringRetriever<R> {
    pub inner: R,
    pub blocklist: Blocklist,
}

impl<R: Retriever> Retriever for BlockFilteringRetriever<R> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn rank(&self, query: &[String], index: &Index) -> Vec<Ranked> {
        let mut ranked = self.inner.rank(query, index);
        ranked.retain(|r| {
            let doc = &index.passage(r.passage).doc_id;
            index.doc_meta(doc).is_some_and(|m| !self.blocklist.is_blocked(&m.url))
        });
        ranked
    }
}

pub fn search(
    query: &str,
    index: Arc<Index>,
    blocklist: &Blocklist,
    k: usize,
) -> Result<Vec<SearchResult>, SearchError> {
    SearchProxy::local(index, blocklist.clone()).search(query, k)
}
