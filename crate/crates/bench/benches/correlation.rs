use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpp_core::correlate::{self, KendallSignificance, PairedSample};
use qpp_core::effectiveness::actuals_for_run;
use qpp_core::synth::{self, SynthConfig};
use qpp_core::MetricSpec;

fn sample(n: usize) -> PairedSample {
    // deterministic pseudo-random pairs with some ties
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 1000) as f64
    };
    let x: Vec<f64> = (0..n).map(|_| next()).collect();
    let y: Vec<f64> = x.iter().map(|v| v + next() / 2.0).collect();
    PairedSample::from_vectors(x, y).unwrap()
}

fn coefficients(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlation");
    for n in [50, 500, 5000] {
        let s = sample(n);
        group.bench_with_input(BenchmarkId::new("pearson", n), &s, |b, s| b.iter(|| correlate::pearson(s).unwrap()));
        group.bench_with_input(BenchmarkId::new("kendall", n), &s, |b, s| {
            b.iter(|| correlate::kendall(s, KendallSignificance::NormalApprox).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("spearman", n), &s, |b, s| b.iter(|| correlate::spearman(s).unwrap()));
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let data = synth::generate(&SynthConfig::default()).unwrap();
    let metric = MetricSpec::ndcg(100);
    c.bench_function("ndcg@100_50x1000", |b| b.iter(|| actuals_for_run(&data.run, &data.qrels, &metric).unwrap()));
}

criterion_group!(benches, coefficients, evaluation);
criterion_main!(benches);
