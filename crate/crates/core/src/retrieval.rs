//! Passage ranking and Passage Briefs.
//!
//! The built-in ranker is Okapi BM25 over the passage index. Anything that
//! implements [`Retriever`] (a dense retriever, for instance) can be used in
//! its place.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claim::Claim;
use crate::corpus::Passage;
use crate::index::{Index, PassageRef};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

pub fn idf(passage_count: usize, doc_freq: usize) -> f64 {
    let n = passage_count as f64;
    let df = doc_freq as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

fn term_weight(index: &Index, params: Bm25Params, df: usize, tf: u32, len: usize) -> f64 {
    let tf = tf as f64;
    let norm = 1.0 - params.b + params.b * len as f64 / index.avg_passage_length();
    idf(index.passage_count(), df) * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Distinct query terms in ascending order. Scores always sum term
/// contributions in this order so every code path yields identical floats.
pub fn query_terms(query: &[String]) -> Vec<&str> {
    query.iter().map(String::as_str).collect::<BTreeSet<_>>().into_iter().collect()
}

/// BM25 score of one passage. Repeated query tokens count once.
pub fn bm25_score(query: &[String], passage: PassageRef, index: &Index, params: Bm25Params) -> f64 {
    let len = index.passage_length(passage);
    query_terms(query)
        .into_iter()
        .filter_map(|t| {
            let tf = index.term_freq(t, passage);
            (tf > 0).then(|| term_weight(index, params, index.doc_freq(t), tf, len))
        })
        .fold(0.0, |acc, w| acc + w)
}

/// Scores every passage sharing at least one term with the query.
pub fn bm25_scores(query: &[String], index: &Index, params: Bm25Params) -> HashMap<PassageRef, f64> {
    let mut scores: HashMap<PassageRef, f64> = HashMap::new();
    for t in query_terms(query) {
        let postings = index.postings(t);
        for p in postings {
            let w = term_weight(index, params, postings.len(), p.tf, index.passage_length(p.passage));
            *scores.entry(p.passage).or_insert(0.0) += w;
        }
    }
    scores
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub passage: PassageRef,
    pub score: f64,
}

/// Descending score, then ascending `(doc_id, passage_index)`.
pub fn compare_ranked(index: &Index, a: &Ranked, b: &Ranked) -> Ordering {
    b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then_with(|| {
        let pa = index.passage(a.passage);
        let pb = index.passage(b.passage);
        (pa.doc_id.as_str(), pa.passage_index).cmp(&(pb.doc_id.as_str(), pb.passage_index))
    })
}

/// A passage ranker. Implementations must return scores in non-increasing
/// order with ties broken by the smallest `(doc_id, passage_index)`.
pub trait Retriever: Send + Sync {
    fn id(&self) -> &str;
    fn rank(&self, query: &[String], index: &Index) -> Vec<Ranked>;
}

#[derive(Debug, Clone, Default)]
pub struct Bm25Retriever {
    pub params: Bm25Params,
}

impl Retriever for Bm25Retriever {
    fn id(&self) -> &str {
        "bm25"
    }

    /// Passages scoring zero are left out of the ranking.
    fn rank(&self, query: &[String], index: &Index) -> Vec<Ranked> {
        let mut ranked: Vec<Ranked> = bm25_scores(query, index, self.params)
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(passage, score)| Ranked { passage, score })
            .collect();
        ranked.sort_by(|a, b| compare_ranked(index, a, b));
        ranked
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PassageBriefError {
    #[error("no passage matches claim `{0}`")]
    NoPassageFound(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageBrief {
    pub claim_id: String,
    pub passage: Passage,
    pub doc_title: String,
    pub url: String,
    pub score: f64,
    pub retriever_id: String,
}

pub fn generate_passage_brief(
    claim: &Claim,
    index: &Index,
    retriever: &dyn Retriever,
) -> Result<PassageBrief, PassageBriefError> {
    let query = text::tokenize(&claim.text);
    let top = retriever
        .rank(&query, index)
        .into_iter()
        .next()
        .ok_or_else(|| PassageBriefError::NoPassageFound(claim.claim_id.clone()))?;
    let entry = index.passage(top.passage);
    let meta = index.doc_meta(&entry.doc_id);
    Ok(PassageBrief {
        claim_id: claim.claim_id.clone(),
        passage: Passage {
            doc_id: entry.doc_id.clone(),
            passage_index: entry.passage_index,
            tokens: text::tokenize(&entry.text),
            text: entry.text.clone(),
        },
        doc_title: meta.map(|m| m.title.clone()).unwrap_or_default(),
        url: meta.map(|m| m.url.clone()).unwrap_or_default(),
        score: top.score,
        retriever_id: retriever.id().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document};

    fn index_of(texts: &[(&str, &str)]) -> Index {
        let docs = texts
            .iter()
            .map(|(id, t)| Document {
                doc_id: id.to_string(),
                title: id.to_string(),
                url: format!("https://example.org/{id}"),
                paragraphs: vec![t.to_string()],
            })
            .collect();
        Index::build(&Corpus::from_documents(docs).unwrap()).unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        text::tokenize(s)
    }

    #[test]
    fn absent_terms_score_zero() {
        let idx = index_of(&[("p1", "social security act"), ("p2", "baseball game today")]);
        let p = Bm25Params::default();
        assert_eq!(bm25_score(&toks("quantum chromodynamics"), 0, &idx, p), 0.0);
        let q = toks("social security");
        assert!(bm25_score(&q, 0, &idx, p) > 0.0);
        assert_eq!(bm25_score(&q, 1, &idx, p), 0.0);
    }

    #[test]
    fn unmatched_claim_has_no_passage() {
        let idx = index_of(&[("p1", "social security act")]);
        let claim = Claim::new("c", "Baseball tonight");
        assert_eq!(
            generate_passage_brief(&claim, &idx, &Bm25Retriever::default()),
            Err(PassageBriefError::NoPassageFound("c".into()))
        );
    }

    #[test]
    fn ties_prefer_smaller_doc_id() {
        let idx = index_of(&[("b", "social security"), ("a", "social security")]);
        let brief = generate_passage_brief(&Claim::new("c", "social"), &idx, &Bm25Retriever::default()).unwrap();
        assert_eq!(brief.passage.doc_id, "a");
        assert_eq!(brief.retriever_id, "bm25");
    }

    #[test]
    fn ranking_scores_agree_with_single_passage_score() {
        let idx = index_of(&[("a", "x y z x"), ("b", "y y w"), ("c", "z")]);
        let q = toks("x y z");
        for r in Bm25Retriever::default().rank(&q, &idx) {
            assert_eq!(r.score, bm25_score(&q, r.passage, &idx, Bm25Params::default()));
        }
    }
}
