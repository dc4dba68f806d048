use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use stepdiff_bench::assignment;
use stepdiff_core::abstractor::{build_value_tree, ladder, DEFAULT_CAP};
use stepdiff_core::differ::{align_and_filter, extract_series};
use stepdiff_core::doc::{build_diff, export, DocEnvelope};
use stepdiff_core::fixer::{fix_multi, MAX_EDITS};
use stepdiff_core::interp::{run, Limits};
use stepdiff_core::lang::parse;

fn benches(c: &mut Criterion) {
    let a = assignment("accumulate");
    let bug = a.bug("combiner_first_arg").unwrap();
    let entry = bug.entry.clone().unwrap();
    let program = parse(&bug.source).unwrap();
    let fixed = fix_multi(&program, &a.rules, &a.suite, MAX_EDITS).unwrap();

    c.bench_function("parse", |b| b.iter(|| parse(black_box(&bug.source)).unwrap()));

    c.bench_function("run", |b| b.iter(|| run(&program, black_box(&entry), a.suite.limits).unwrap()));

    let deep = parse("def count(n):\n    if n == 0:\n        return 0\n    return 1 + count(n - 1)\n").unwrap();
    c.bench_function("run_recursion_150", |b| b.iter(|| run(&deep, "count(150)", Limits::default()).unwrap()));

    c.bench_function("fix", |b| b.iter(|| fix_multi(&program, &a.rules, &a.suite, MAX_EDITS).unwrap()));

    let product = assignment("product");
    let two = parse(&product.bug("two_bugs").unwrap().source).unwrap();
    c.bench_function("fix_two_edits", |b| {
        b.iter(|| fix_multi(&two, &product.rules, &product.suite, MAX_EDITS).unwrap())
    });

    let t1 = run(&program, &entry, a.suite.limits).unwrap();
    let t2 = run(&fixed.fixed, &entry, a.suite.limits).unwrap();
    c.bench_function("align_and_filter", |b| {
        b.iter(|| align_and_filter(&extract_series(&t1), &extract_series(&t2)))
    });

    let (kept, _) = align_and_filter(&extract_series(&t1), &extract_series(&t2));
    let step = kept[0].incorrect.updates[2].step;
    c.bench_function("ladder", |b| {
        b.iter(|| ladder(&build_value_tree(&program, &t1, black_box(step)).unwrap(), DEFAULT_CAP))
    });

    c.bench_function("build_and_export", |b| {
        b.iter(|| {
            let doc = build_diff(&a.id, &program, &fixed, &entry, a.suite.limits).unwrap();
            export(&DocEnvelope::new(doc, "1970-01-01T00:00:00Z"))
        })
    });
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
