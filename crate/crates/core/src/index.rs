//! Inverted index over corpus passages, with a line-delimited on-disk form.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

pub const INDEX_MAGIC: &str = "BRIEFIDX v1";

/// Position of a passage in [`Index::passages`].
pub type PassageRef = usize;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("index i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("index file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub passage: PassageRef,
    pub tf: u32,
}

/// Stored per passage so the index alone can render briefs and search hits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageEntry {
    pub doc_id: String,
    pub passage_index: usize,
    pub length: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub title: String,
    pub url: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    postings: BTreeMap<String, Vec<Posting>>,
    passages: Vec<PassageEntry>,
    docs: BTreeMap<String, DocMeta>,
    doc_passages: HashMap<String, Vec<PassageRef>>,
    avg_passage_length: f64,
}

impl Index {
    pub fn build(corpus: &Corpus) -> Result<Self, IndexError> {
        if corpus.passages().is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut passages = Vec::with_capacity(corpus.passages().len());
        for (pref, p) in corpus.passages().iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &p.tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term.to_string()).or_default().push(Posting { passage: pref, tf: count });
            }
            passages.push(PassageEntry {
                doc_id: p.doc_id.clone(),
                passage_index: p.passage_index,
                length: p.tokens.len(),
                text: p.text.clone(),
            });
        }
        let docs = corpus
            .documents()
            .iter()
            .map(|d| (d.doc_id.clone(), DocMeta { title: d.title.clone(), url: d.url.clone() }))
            .collect();
        Ok(Self::assemble(postings, passages, docs))
    }

    fn assemble(
        postings: BTreeMap<String, Vec<Posting>>,
        passages: Vec<PassageEntry>,
        docs: BTreeMap<String, DocMeta>,
    ) -> Self {
        let total: usize = passages.iter().map(|p| p.length).sum();
        let avg_passage_length = if passages.is_empty() { 0.0 } else { total as f64 / passages.len() as f64 };
        let mut doc_passages: HashMap<String, Vec<PassageRef>> = HashMap::new();
        for (i, p) in passages.iter().enumerate() {
            doc_passages.entry(p.doc_id.clone()).or_default().push(i);
        }
        Index { postings, passages, docs, doc_passages, avg_passage_length }
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn term_freq(&self, term: &str, passage: PassageRef) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&passage, |p| p.passage).map(|i| list[i].tf).unwrap_or(0)
    }

    pub fn passage_count(&self) -> usize {
        self.passages.len()
    }

    pub fn passage(&self, pref: PassageRef) -> &PassageEntry {
        &self.passages[pref]
    }

    pub fn passages(&self) -> &[PassageEntry] {
        &self.passages
    }

    pub fn passage_length(&self, pref: PassageRef) -> usize {
        self.passages[pref].length
    }

    pub fn avg_passage_length(&self) -> f64 {
        self.avg_passage_length
    }

    pub fn doc_meta(&self, doc_id: &str) -> Option<&DocMeta> {
        self.docs.get(doc_id)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }

    /// Passages of a document in passage order.
    pub fn doc_passages(&self, doc_id: &str) -> &[PassageRef] {
        self.doc_passages.get(doc_id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Full body text of a document, rebuilt from its passages.
    pub fn doc_text(&self, doc_id: &str) -> Option<String> {
        let refs = self.doc_passages.get(doc_id)?;
        Some(refs.iter().map(|&r| self.passages[r].text.as_str()).collect())
    }

    /// Body text of the first document (by id) with this url.
    pub fn text_by_url(&self, url: &str) -> Option<String> {
        let id = self.docs.iter().find(|(_, m)| m.url == url)?.0;
        self.doc_text(id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Layout: magic line, a header record, then one record per document,
    /// passage, and term, each tagged by `k`.
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), IndexError> {
        writeln!(w, "{INDEX_MAGIC}")?;
        let header = serde_json::json!({
            "k": "header",
            "documents": self.docs.len(),
            "passages": self.passages.len(),
            "terms": self.postings.len(),
        });
        writeln!(w, "{header}")?;
        for (id, meta) in &self.docs {
            let rec = serde_json::json!({"k": "doc", "id": id, "title": meta.title, "url": meta.url});
            writeln!(w, "{rec}")?;
        }
        for p in &self.passages {
            let rec = serde_json::json!({
                "k": "passage", "doc_id": p.doc_id, "passage_index": p.passage_index,
                "length": p.length, "text": p.text,
            });
            writeln!(w, "{rec}")?;
        }
        for (term, list) in &self.postings {
            let pairs: Vec<[u64; 2]> = list.iter().map(|p| [p.passage as u64, p.tf as u64]).collect();
            let rec = serde_json::json!({"k": "term", "t": term, "p": pairs});
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self, IndexError> {
        #[derive(Deserialize)]
        #[serde(tag = "k", rename_all = "lowercase")]
        enum Record {
            Header { documents: usize, passages: usize, terms: usize },
            Doc { id: String, title: String, url: String },
            Passage { doc_id: String, passage_index: usize, length: usize, text: String },
            Term { t: String, p: Vec<(usize, u32)> },
        }

        let mut lines = reader.lines();
        let fmt = |line: usize, message: String| IndexError::Format { line, message };
        match lines.next() {
            Some(Ok(l)) if l == INDEX_MAGIC => {}
            Some(Ok(l)) => return Err(fmt(1, format!("bad magic header {l:?}"))),
            Some(Err(e)) => return Err(e.into()),
            None => return Err(fmt(1, "missing magic header".into())),
        }
        let mut header = None;
        let mut docs = BTreeMap::new();
        let mut passages = Vec::new();
        let mut postings = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            let rec: Record = serde_json::from_str(&line).map_err(|e| fmt(line_no, e.to_string()))?;
            match rec {
                Record::Header { documents, passages, terms } => header = Some((documents, passages, terms)),
                Record::Doc { id, title, url } => {
                    docs.insert(id, DocMeta { title, url });
                }
                Record::Passage { doc_id, passage_index, length, text } => {
                    passages.push(PassageEntry { doc_id, passage_index, length, text })
                }
                Record::Term { t, p } => {
                    if p.iter().any(|&(r, _)| r >= passages.len()) {
                        return Err(fmt(line_no, format!("posting for `{t}` references unknown passage")));
                    }
                    let list = p.into_iter().map(|(passage, tf)| Posting { passage, tf }).collect();
                    postings.insert(t, list);
                }
            }
        }
        let (nd, np, nt) = header.ok_or_else(|| fmt(2, "missing header record".into()))?;
        if nd != docs.len() || np != passages.len() || nt != postings.len() {
            return Err(fmt(2, "header counts do not match records".into()));
        }
        Ok(Self::assemble(postings, passages, docs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use proptest::prelude::*;

    fn corpus_of(paragraphs: &[&str]) -> Corpus {
        let docs = paragraphs
            .iter()
            .enumerate()
            .map(|(i, p)| Document {
                doc_id: format!("d{i}"),
                title: format!("Doc {i}"),
                url: format!("https://example.org/{i}"),
                paragraphs: vec![p.to_string()],
            })
            .collect();
        Corpus::from_documents(docs).unwrap()
    }

    #[test]
    fn counts_document_frequency() {
        let idx = Index::build(&corpus_of(&["a b", "a c"])).unwrap();
        assert_eq!(idx.doc_freq("a"), 2);
        assert_eq!(idx.doc_freq("b"), 1);
        assert_eq!(idx.doc_freq("zzz"), 0);
        assert_eq!(idx.avg_passage_length(), 2.0);
        assert_eq!(idx.passage_count(), 2);
    }

    #[test]
    fn term_frequency_in_single_passage() {
        let idx = Index::build(&corpus_of(&["x x x"])).unwrap();
        assert_eq!(idx.postings("x"), &[Posting { passage: 0, tf: 3 }]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let c = Corpus::from_documents(vec![]).unwrap();
        assert!(matches!(Index::build(&c), Err(IndexError::EmptyCorpus)));
    }

    #[test]
    fn persisted_form_round_trips() {
        let idx = Index::build(&corpus_of(&["alpha beta. Gamma!", "beta delta"])).unwrap();
        let mut buf = Vec::new();
        idx.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(INDEX_MAGIC.as_bytes()));
        let back = Index::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.doc_text("d0").unwrap(), "alpha beta. Gamma!");
    }

    #[test]
    fn rejects_wrong_magic() {
        let err = Index::read_from("BRIEFIDX v0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IndexError::Format { line: 1, .. }));
    }

    proptest! {
        #[test]
        fn doc_freq_matches_brute_force(
            texts in prop::collection::vec("[a-e]( [a-e]){0,8}", 1..12)
        ) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let c = corpus_of(&refs);
            let idx = Index::build(&c).unwrap();
            for term in ["a", "b", "c", "d", "e"] {
                let brute = c.passages().iter().filter(|p| p.tokens.iter().any(|t| t == term)).count();
                prop_assert_eq!(idx.doc_freq(term), brute);
            }
            let mean = c.passages().iter().map(|p| p.tokens.len()).sum::<usize>() as f64 / c.passages().len() as f64;
            prop_assert!((idx.avg_passage_length() - mean).abs() < 1e-12);
            prop_assert_eq!(Index::build(&c).unwrap(), idx);
        }
    }
}
