use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use soap_core::analysis::{family_mean, SystemSpec};
use soap_core::rank::{builtin_policy, FamilySpec, PolicyParams};
use soap_core::simulator::{run_many, SimConfig};
use soap_core::{Execution, SizeDistribution};

fn spec(name: &str, law: SizeDistribution, lambda: f64) -> SystemSpec {
    let params = PolicyParams {
        families: vec![FamilySpec::new(1.0, law)],
        ..Default::default()
    };
    SystemSpec::new(builtin_policy(name, &params).unwrap(), lambda).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

/// Per-family mean of SRPT on a Pareto law: a continuous size integral
/// whose cells are evaluated independently.
fn bench_family_mean(c: &mut Criterion) {
    let law = SizeDistribution::pareto(2.5, 1.0).unwrap();
    let s = spec("srpt", law, 0.4);
    let mut group = c.benchmark_group("family_mean");
    group.sample_size(10);
    for (label, exec) in modes() {
        group.bench_function(label, |b| b.iter(|| family_mean(&s, 0, exec).unwrap()));
    }
    group.finish();
}

fn bench_lambda_sweep(c: &mut Criterion) {
    let law = SizeDistribution::hyperexponential(vec![(0.9, 2.0), (0.1, 0.2)]).unwrap();
    let lambdas: Vec<f64> = (1..=16).map(|k| 0.03 * k as f64).collect();
    let mut group = c.benchmark_group("gittins_sweep");
    group.sample_size(10);
    for (label, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(label, lambdas.len()), &lambdas, |b, ls| {
            b.iter(|| {
                exec.map(ls, |&l| {
                    let s = spec("gittins", law.clone(), l);
                    soap_core::analysis::mean_response(&s, 0, 3.0).unwrap().mean_total
                })
            })
        });
    }
    group.finish();
}

fn bench_replicas(c: &mut Criterion) {
    let s = spec("srpt", SizeDistribution::exponential(1.0).unwrap(), 0.7);
    let configs: Vec<SimConfig> = (0..8).map(|seed| SimConfig::new(s.clone(), 50_000, seed)).collect();
    let mut group = c.benchmark_group("sim_replicas");
    group.sample_size(10);
    for (label, exec) in modes() {
        group.bench_function(label, |b| b.iter(|| run_many(&configs, exec)));
    }
    group.finish();
}

criterion_group!(benches, bench_family_mean, bench_lambda_sweep, bench_replicas);
criterion_main!(benches);
