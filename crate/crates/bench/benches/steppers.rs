use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use pbn_bench::{dense, leafy};
use pbn_core::{build_alias, prepare, rng, Engine, Method, PrepareConfig, State, Stepper};

fn steps(c: &mut Criterion) {
    let cfg = PrepareConfig::default();
    for (label, model) in [("leafy", leafy()), ("dense", dense())] {
        let mut group = c.benchmark_group(format!("step/{label}"));
        for method in Method::ALL {
            let engine = Engine::build(&model, method, &cfg).unwrap();
            let mut state = State::zeros(engine.width());
            let mut scratch = State::zeros(engine.width());
            let mut draws = rng::seeded(1);
            group.bench_function(method.name(), |b| {
                b.iter(|| engine.step(black_box(&mut state), &mut scratch, &mut draws))
            });
        }
        group.finish();
    }
}

fn alias(c: &mut Criterion) {
    let mut group = c.benchmark_group("alias");
    for size in [3usize, 1 << 10, 1 << 16] {
        let probs = vec![1.0 / size as f64; size];
        let table = build_alias(&probs).unwrap();
        let mut draws = rng::seeded(2);
        group.bench_function(format!("sample/{size}"), |b| {
            b.iter(|| table.sample(&mut draws))
        });
        group.bench_function(format!("build/{size}"), |b| {
            b.iter(|| build_alias(black_box(&probs)).unwrap())
        });
    }
    group.finish();
}

fn preparation(c: &mut Criterion) {
    let cfg = PrepareConfig::default();
    let mut group = c.benchmark_group("prepare");
    group.sample_size(10);
    for (label, model) in [("leafy", leafy()), ("dense", dense())] {
        group.bench_function(label, |b| {
            b.iter_batched(
                || model.clone(),
                |m| prepare(&m, &cfg).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, steps, alias, preparation);
criterion_main!(benches);
