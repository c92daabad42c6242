use std::path::PathBuf;
use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use flexcheck_core::check::{exists_trace, DEFAULT_MAX_STATES};
use flexcheck_core::coherence::{prepare, run_all_on, AnalysisOptions};
use flexcheck_core::ltl::{ltl_to_buchi, translate_rule, LtlFormula};
use flexcheck_core::syntax::parse_spec;

fn source(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn frontend(c: &mut Criterion) {
    let src = source("university.flx");
    c.bench_function("parse+compile university", |b| {
        b.iter(|| {
            let doc = parse_spec(black_box(&src)).unwrap();
            prepare(&doc).unwrap()
        })
    });
}

fn automata(c: &mut Criterion) {
    let doc = parse_spec(&source("university.flx")).unwrap();
    let rules: Vec<LtlFormula> = doc
        .rules
        .iter()
        .filter(|r| !r.form.is_permission())
        .map(|r| translate_rule(&r.form).unwrap())
        .collect();
    c.bench_function("buchi per university rule", |b| {
        b.iter(|| rules.iter().map(|f| ltl_to_buchi(black_box(f)).states.len()).sum::<usize>())
    });
}

fn checking(c: &mut Criterion) {
    let doc = parse_spec(&source("library.flx")).unwrap();
    let (doc, ts) = prepare(&doc).unwrap();
    let counted = translate_rule(&doc.rule("counted").unwrap().form).unwrap();
    let naive = translate_rule(&doc.rule("naive").unwrap().form).unwrap();
    let both = LtlFormula::and(naive, LtlFormula::not(counted));
    c.bench_function("exists_trace library naive-not-counted", |b| {
        b.iter(|| exists_trace(&ts, black_box(&both), DEFAULT_MAX_STATES).unwrap())
    });

    let doc = parse_spec(&source("traffic.flx")).unwrap();
    let (doc, ts) = prepare(&doc).unwrap();
    c.bench_function("check traffic", |b| b.iter(|| run_all_on(&doc, &ts, AnalysisOptions::default())));
}

fn case_study(c: &mut Criterion) {
    let doc = parse_spec(&source("university.flx")).unwrap();
    let (doc, ts) = prepare(&doc).unwrap();
    let mut group = c.benchmark_group("case study");
    group.sample_size(10).measurement_time(Duration::from_secs(40));
    group.bench_function("check university", |b| b.iter(|| run_all_on(&doc, &ts, AnalysisOptions::default())));
    group.finish();
}

criterion_group!(benches, frontend, automata, checking, case_study);
criterion_main!(benches);
