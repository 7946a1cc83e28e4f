#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;
use std::sync::Arc;

use briefbench::claim::Claim;
use briefbench::corpus::{ingest_corpus, Corpus};
use briefbench::dataset::Dataset;
use briefbench::entity::AliasTable;
use briefbench::index::Index;
use briefbench::qabrief::QaBriefer;
use briefbench::search::{Blocklist, SearchProxy};
use briefbench::workbench::Resources;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub struct Fixtures {
    pub corpus: Arc<Corpus>,
    pub index: Arc<Index>,
    pub aliases: Arc<AliasTable>,
    pub blocklist: Blocklist,
    pub dataset: Dataset,
    pub claims: Vec<Claim>,
}

impl Fixtures {
    pub fn load() -> Self {
        let (corpus, _) = ingest_corpus(fixture("corpus.jsonl")).expect("corpus fixture");
        let blocklist = Blocklist::load(fixture("blocklist.txt")).expect("blocklist fixture");
        let keep = |d: &briefbench::corpus::Document| !blocklist.is_blocked(&d.url);
        let mut aliases = AliasTable::from_corpus_filtered(&corpus, keep);
        let file = std::io::BufReader::new(std::fs::File::open(fixture("aliases.jsonl")).unwrap());
        aliases.extend_from_reader(file, &corpus, keep).expect("alias fixture");
        let index = Index::build(&corpus).expect("index");
        let dataset = Dataset::load(fixture("dataset.jsonl")).expect("dataset fixture");
        let claims = std::fs::read_to_string(fixture("claims.jsonl"))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        Fixtures {
            corpus: Arc::new(corpus),
            index: Arc::new(index),
            aliases: Arc::new(aliases),
            blocklist,
            dataset,
            claims,
        }
    }

    pub fn proxy(&self) -> SearchProxy {
        SearchProxy::local(Arc::clone(&self.index), self.blocklist.clone())
    }

    pub fn briefer(&self) -> QaBriefer {
        QaBriefer::baseline(Arc::clone(&self.corpus), Arc::clone(&self.aliases), self.proxy())
    }

    pub fn resources(&self) -> Resources {
        Resources {
            corpus: Arc::clone(&self.corpus),
            index: Arc::clone(&self.index),
            aliases: Arc::clone(&self.aliases),
            dataset: Arc::new(self.dataset.clone()),
            proxy: self.proxy(),
            briefer: Arc::new(self.briefer()),
        }
    }
}
