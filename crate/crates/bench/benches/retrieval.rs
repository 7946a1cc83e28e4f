use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use briefbench::corpus::Corpus;
use briefbench::index::Index;
use briefbench::retrieval::{generate_passage_brief, Bm25Retriever, Retriever};
use briefbench::search::{Blocklist, SearchProxy};
use briefbench::text::tokenize;
use briefbench_bench::{scaled_documents, Setup};

fn retrieval(c: &mut Criterion) {
    let setup = Setup::fixtures();
    let claim = &setup.claims[0];
    let query = tokenize(&claim.text);

    c.bench_function("index_build/fixture", |b| b.iter(|| Index::build(black_box(&setup.corpus)).unwrap()));

    let mut group = c.benchmark_group("bm25_rank");
    for extra in [0usize, 1_000, 5_000] {
        let corpus = Corpus::from_documents(scaled_documents(extra)).unwrap();
        let index = Index::build(&corpus).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(corpus.passages().len()), &index, |b, index| {
            b.iter(|| Bm25Retriever::default().rank(black_box(&query), index))
        });
    }
    group.finish();

    c.bench_function("passage_brief/fixture", |b| {
        b.iter(|| generate_passage_brief(black_box(claim), &setup.index, &Bm25Retriever::default()).unwrap())
    });

    let corpus = Corpus::from_documents(scaled_documents(5_000)).unwrap();
    let proxy = SearchProxy::local(Arc::new(Index::build(&corpus).unwrap()), Blocklist::default());
    c.bench_function("search_proxy/k10", |b| b.iter(|| proxy.search(black_box(&claim.text), 10).unwrap()));
}

criterion_group!(benches, retrieval);
criterion_main!(benches);
