use criterion::{criterion_group, criterion_main, Criterion};
use seqnovelty::corpus::MixtureGenerator;
use seqnovelty::detector::{train_detector, DetectorConfig, Router};
use seqnovelty::lda::{run_ensemble, EnsembleParams};
use seqnovelty::lstm::{ModelDims, TrainConfig};
use seqnovelty::par;

fn bench(c: &mut Criterion) {
    let gen = MixtureGenerator::partially_disjoint(3, 8, 8, 3, 0.3, 0).unwrap();
    let corpus = gen.generate(300, 0, (15, 30), 1).unwrap();
    let params = EnsembleParams {
        iterations: 50,
        burn_in: 10,
        ..EnsembleParams::fixed(vec![3, 4, 5, 6], 2)
    };
    let (router, _) = Router::kmeans(&corpus, Some(3), 3, 50).unwrap();
    let cfg = DetectorConfig {
        dims: ModelDims {
            embed_dim: 16,
            hidden_dim: 16,
        },
        train: TrainConfig {
            epochs: 1,
            ..Default::default()
        },
    };
    let detector = train_detector(&corpus, router.clone(), &cfg).unwrap();

    let mut g = c.benchmark_group("lda_ensemble");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| run_ensemble(&corpus, &params).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| run_ensemble(&corpus, &params).unwrap()))
    });
    g.finish();

    let mut g = c.benchmark_group("train_detector");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| train_detector(&corpus, router.clone(), &cfg).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| train_detector(&corpus, router.clone(), &cfg).unwrap()))
    });
    g.finish();

    let mut g = c.benchmark_group("score_corpus");
    g.bench_function("parallel", |b| b.iter(|| detector.score_corpus(&corpus).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| detector.score_corpus(&corpus).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
