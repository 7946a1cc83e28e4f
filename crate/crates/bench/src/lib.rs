//! Shared setup for the benchmarks.

use std::path::PathBuf;
use std::sync::Arc;

use briefbench::claim::Claim;
use briefbench::corpus::{ingest_corpus, Corpus, Document};
use briefbench::entity::AliasTable;
use briefbench::index::Index;
use briefbench::qabrief::QaBriefer;
use briefbench::search::{Blocklist, SearchProxy};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub struct Setup {
    pub corpus: Arc<Corpus>,
    pub index: Arc<Index>,
    pub aliases: Arc<AliasTable>,
    pub blocklist: Blocklist,
    pub claims: Vec<Claim>,
}

impl Setup {
    pub fn fixtures() -> Self {
        let (corpus, _) = ingest_corpus(fixture("corpus.jsonl")).expect("corpus fixture");
        let blocklist = Blocklist::load(fixture("blocklist.txt")).expect("blocklist fixture");
        let aliases = AliasTable::from_corpus_filtered(&corpus, |d| !blocklist.is_blocked(&d.url));
        let index = Index::build(&corpus).expect("index");
        let claims = std::fs::read_to_string(fixture("claims.jsonl"))
            .expect("claims fixture")
            .lines()
            .map(|l| serde_json::from_str(l).expect("claim"))
            .collect();
        Setup { corpus: Arc::new(corpus), index: Arc::new(index), aliases: Arc::new(aliases), blocklist, claims }
    }

    pub fn proxy(&self) -> SearchProxy {
        SearchProxy::local(Arc::clone(&self.index), self.blocklist.clone())
    }

    pub fn briefer(&self) -> QaBriefer {
        QaBriefer::baseline(Arc::clone(&self.corpus), Arc::clone(&self.aliases), self.proxy())
    }
}

/// Fixture documents plus `extra` synthetic ones built by a fixed linear
/// congruential generator from the fixture vocabulary.
pub fn scaled_documents(extra: usize) -> Vec<Document> {
    let (corpus, _) = ingest_corpus(fixture("corpus.jsonl")).expect("corpus fixture");
    let mut docs = corpus.documents().to_vec();
    let vocab: Vec<String> = corpus.passages().iter().flat_map(|p| p.tokens.iter().cloned()).collect();
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move |n: usize| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as usize % n
    };
    for i in 0..extra {
        let paragraphs = (0..1 + next(4))
            .map(|_| (0..20 + next(120)).map(|_| vocab[next(vocab.len())].as_str()).collect::<Vec<_>>().join(" "))
            .collect();
        docs.push(Document {
            doc_id: format!("synthetic_{i:05}"),
            title: format!("Synthetic {i}"),
            url: format!("https://example.org/synthetic/{i}"),
            paragraphs,
        });
    }
    docs
}
