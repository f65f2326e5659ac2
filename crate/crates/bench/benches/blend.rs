use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freshblend::{blend, err_iaa, IntentDistribution, MetricConfig};
use freshblend_bench::{corpus, pools};

fn bench_blend(c: &mut Criterion) {
    let corpus = corpus(200);
    let dist = IntentDistribution::from_fresh(0.75).unwrap();
    let mut group = c.benchmark_group("blend");
    for depth in [5, 10, 20] {
        let cfg = MetricConfig {
            depth,
            ..MetricConfig::default()
        };
        let pools = pools(&corpus, 200, depth);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &pools, |b, pools| {
            b.iter(|| {
                for pool in pools {
                    black_box(blend(black_box(pool), dist, &cfg).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn bench_err_iaa(c: &mut Criterion) {
    let corpus = corpus(200);
    let cfg = MetricConfig::default();
    let dist = IntentDistribution::from_fresh(0.5).unwrap();
    let pools = pools(&corpus, 200, cfg.depth);
    c.bench_function("err_iaa/200 pages", |b| {
        b.iter(|| {
            for pool in &pools {
                black_box(err_iaa(black_box(pool), dist, &cfg).unwrap());
            }
        })
    });
}

criterion_group!(benches, bench_blend, bench_err_iaa);
criterion_main!(benches);
