use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use uniatt::domain::datt_domain_automaton;
use uniatt::dsl::{parse_dsl, serialize_bundle};
use uniatt::eval::{enumerate_derivations_bounded, enumerate_uniform, eval_datt, eval_dattu};
use uniatt::fixtures;
use uniatt::random::{random_att, RandomSizes};
use uniatt::uniformize::uniformize_att;
use uniatt::Tree;

/// Right comb `f(e, f(e, ... f(e, e)))` with `n` inner nodes.
fn comb(n: usize) -> Tree {
    (0..n).fold(Tree::leaf("e"), |t, _| Tree::new("f", vec![Tree::leaf("e"), t]))
}

fn monadic(symbol: &str, n: usize) -> Tree {
    (0..n).fold(Tree::leaf("e"), |t, _| Tree::new(symbol, vec![t]))
}

fn evaluation(c: &mut Criterion) {
    let ex1 = fixtures::ex1();
    let mut g = c.benchmark_group("eval_datt/ex1");
    for n in [16, 128, 1024] {
        let s = comb(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| eval_datt(&ex1, s).unwrap())
        });
    }
    g.finish();

    let d = uniformize_att(&fixtures::run()).unwrap().result;
    let mut g = c.benchmark_group("eval_dattu/run");
    for n in [16, 128, 1024] {
        let s = monadic("h", n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| eval_dattu(&d, s).unwrap())
        });
    }
    g.finish();
}

fn construction(c: &mut Criterion) {
    let mut g = c.benchmark_group("uniformize_att");
    for (name, a) in [
        ("ex1", fixtures::ex1()),
        ("run", fixtures::run()),
        ("revg", fixtures::revg()),
    ] {
        g.bench_function(name, |b| b.iter(|| uniformize_att(black_box(&a)).unwrap()));
    }
    let sizes = RandomSizes::default();
    let randoms: Vec<_> = (0..8).map(|seed| random_att(seed, &sizes)).collect();
    g.bench_function("random x8", |b| {
        b.iter(|| {
            for a in &randoms {
                black_box(uniformize_att(a).unwrap());
            }
        })
    });
    g.finish();

    let ex1 = fixtures::ex1();
    c.bench_function("datt_domain_automaton/ex1", |b| {
        b.iter(|| datt_domain_automaton(&ex1).unwrap())
    });

    let text = serialize_bundle(&uniformize_att(&fixtures::revg()).unwrap());
    c.bench_function("parse_dsl/revg bundle", |b| {
        b.iter(|| parse_dsl(black_box(&text)).unwrap())
    });
}

fn oracles(c: &mut Criterion) {
    let run = fixtures::run();
    let mut g = c.benchmark_group("oracles/run");
    for n in [2, 4, 6] {
        let s = monadic("g", n);
        g.bench_with_input(BenchmarkId::new("uniform", n), &s, |b, s| {
            b.iter(|| enumerate_uniform(&run, s).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("bounded", n), &s, |b, s| {
            b.iter(|| enumerate_derivations_bounded(&run, s, 2_000).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, evaluation, construction, oracles);
criterion_main!(benches);
