use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use motivmine::lda::{self, LdaParams};
use motivmine::model::{self, class_weights};
use motivmine::synth::{self, SynthParams};
use motivmine::{lexicon, tfidf, Lexicon, StopwordList, SvmParams, TokenizedDoc};

fn corpus(n: usize) -> (motivmine::Dataset, Vec<TokenizedDoc>) {
    let (ds, _) = synth::generate(&SynthParams {
        n_records: n,
        ..SynthParams::default()
    });
    let stopwords = StopwordList::bundled_dutch();
    let docs = ds
        .records
        .iter()
        .map(|r| TokenizedDoc::from_text(r.id.clone(), &r.motivation_text, &stopwords))
        .collect();
    (ds, docs)
}

fn text(c: &mut Criterion) {
    let (ds, docs) = corpus(2000);
    let stopwords = StopwordList::bundled_dutch();
    c.bench_function("tokenize 2000 texts", |b| {
        b.iter(|| {
            for r in &ds.records {
                black_box(TokenizedDoc::from_text(r.id.as_str(), &r.motivation_text, &stopwords));
            }
        })
    });
    let vocab = tfidf::build_vocabulary(&docs, 2).unwrap();
    c.bench_function("tfidf vocabulary + transform 2000 docs", |b| {
        b.iter(|| {
            let v = tfidf::build_vocabulary(black_box(&docs), 2).unwrap();
            black_box(tfidf::transform_block(&docs, &v))
        })
    });
    let lex = Lexicon::bundled_mini();
    c.bench_function("dictionary features 2000 docs", |b| {
        b.iter(|| black_box(lexicon::extract_block(black_box(&docs), &lex)))
    });

    let mut group = c.benchmark_group("lda");
    group.sample_size(10);
    group.bench_function("10 sweeps, K=15, 2000 docs", |b| {
        let params = LdaParams {
            sweeps: 10,
            ..LdaParams::new(15)
        };
        b.iter(|| black_box(lda::fit(&docs, &vocab, &params).unwrap()))
    });
    let state = lda::fit(&docs, &vocab, &LdaParams { sweeps: 20, ..LdaParams::new(15) }).unwrap();
    group.bench_function("fold-in 2000 docs, 50 sweeps", |b| {
        b.iter(|| black_box(lda::fold_in_block(&state.model, &docs, 50, 0)))
    });
    group.finish();
}

fn svm(c: &mut Criterion) {
    let (ds, docs) = corpus(2000);
    let vocab = tfidf::build_vocabulary(&docs, 2).unwrap();
    let block = tfidf::transform_block(&docs, &vocab);
    let x = motivmine::FeatureMatrix::from_blocks(&[&block]).unwrap();
    let y = ds.labels().unwrap();
    let weights = class_weights(&y).unwrap();
    let mut group = c.benchmark_group("svm");
    group.sample_size(10);
    group.bench_function("dual coordinate descent, tfidf 2000 docs", |b| {
        b.iter(|| black_box(model::train(&x, &y, weights, &SvmParams::default()).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, text, svm);
criterion_main!(benches);
