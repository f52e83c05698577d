use std::collections::BTreeSet;
use std::path::PathBuf;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use anaphora::batch;
use anaphora::corpus::{parse_corpus, Corpus};
use anaphora::distinguish::{build_distinguishing_description, AttributeTable, Context};
use anaphora::model::{AttributeValue, EntityId};
use anaphora::report;

fn fixtures() -> Vec<Corpus> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| parse_corpus(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}

fn contexts(count: usize) -> Vec<(AttributeTable, EntityId)> {
    let mut rng = StdRng::seed_from_u64(7);
    (0..count)
        .map(|_| {
            let mut t = AttributeTable::default();
            let n = rng.gen_range(2..=8);
            for i in 0..n {
                let pairs: Vec<_> = (0..8)
                    .map(|a| AttributeValue::new(&format!("a{a}"), &format!("v{}", rng.gen_range(0..3))))
                    .collect();
                t.insert(EntityId::new(format!("x{i}")), pairs);
            }
            (t, EntityId::new("x0"))
        })
        .collect()
}

fn describe((table, target): &(AttributeTable, EntityId)) -> bool {
    let ctx = Context::new(table.ids().cloned()).unwrap();
    let cand: BTreeSet<_> = table.attrs[target].clone();
    build_distinguishing_description(target, &cand, &ctx, table).is_ok()
}

fn classify(c: &Corpus) -> u32 {
    report::run_classify(c).unwrap().stats().total()
}

fn bench(c: &mut Criterion) {
    let docs: Vec<Corpus> = fixtures().into_iter().cycle().take(96).collect();
    let ctxs = contexts(4_000);

    let mut g = c.benchmark_group("classify-fixtures");
    g.bench_function(BenchmarkId::new("sequential", docs.len()), |b| {
        b.iter(|| batch::map_sequential(black_box(&docs), classify))
    });
    #[cfg(feature = "parallel")]
    g.bench_function(BenchmarkId::new("parallel", docs.len()), |b| {
        b.iter(|| batch::map_parallel(black_box(&docs), classify))
    });
    g.finish();

    let mut g = c.benchmark_group("greedy-sweep");
    g.bench_function(BenchmarkId::new("sequential", ctxs.len()), |b| {
        b.iter(|| batch::map_sequential(black_box(&ctxs), describe))
    });
    #[cfg(feature = "parallel")]
    g.bench_function(BenchmarkId::new("parallel", ctxs.len()), |b| {
        b.iter(|| batch::map_parallel(black_box(&ctxs), describe))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
