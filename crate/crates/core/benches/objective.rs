use cage::data::generators::{gen_near_random, gen_twoset};
use cage::parallel::Parallelism;
use cage::training::engine::{evaluate, GuideMode, ObjectiveSpec};
use cage::training::{fit, BatchSize, InitScheme, TrainConfig};
use cage::variants::{score_model, VariantId};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("parallel", Parallelism::Parallel),
];

fn objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_and_gradient");
    for m in [1_000, 20_000] {
        let file = gen_near_random(m, 50, 0.1, 0).unwrap();
        let obs = file.to_observations().unwrap();
        let model = score_model(VariantId::Cage, &file.lfs, 2).unwrap();
        let p = vec![0.3; model.num_params()];
        let batch: Vec<usize> = (0..m).collect();
        for guide in [GuideMode::KlGuide, GuideMode::DataGuide] {
            for (name, parallelism) in MODES {
                let spec = ObjectiveSpec {
                    guide,
                    reg_weight: 1.0,
                    parallelism,
                };
                let mut grad = vec![0.0; p.len()];
                group.bench_with_input(BenchmarkId::new(format!("{}/{name}", guide.name()), m), &m, |b, _| {
                    b.iter(|| evaluate(model.as_ref(), black_box(&p), &obs, &batch, spec, Some(&mut grad)))
                });
            }
        }
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let file = gen_twoset(5_000, 3, 6, 0.9, 0).unwrap();
    let obs = file.to_observations().unwrap();
    let mut group = c.benchmark_group("fit_20_epochs");
    group.sample_size(10);
    for (name, parallelism) in MODES {
        let config = TrainConfig {
            epochs: 20,
            init: InitScheme::AllOnes,
            batch_size: BatchSize::Full,
            parallelism,
            ..TrainConfig::default()
        };
        group.bench_function(name, |b| b.iter(|| fit(&obs, &file.lfs, black_box(&config)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, objective, training);
criterion_main!(benches);
