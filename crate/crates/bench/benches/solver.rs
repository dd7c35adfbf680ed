use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wavesheet::birkhoff_rott::{birkhoff_rott_velocity, cauchy_transform};
use wavesheet::dynamics::{kinematic_rhs, step};
use wavesheet::energy::{energy, theta_s_sup};
use wavesheet::layer_solve::{solve_second_kind, SecondKindProblem, Side, Sign};
use wavesheet::spectral::{hilbert_transform, RealField};
use wavesheet::{DerivedFields, KernelWorkspace, Model, Scheme};
use wavesheet_bench::wavy_state;

fn operators(c: &mut Criterion) {
    let mut group = c.benchmark_group("operators");
    for n in [64, 128, 256] {
        let s = wavy_state(n);
        let ws = KernelWorkspace::new(&s).unwrap();
        group.bench_with_input(BenchmarkId::new("hilbert", n), &s, |b, s| b.iter(|| hilbert_transform(&s.theta)));
        group.bench_with_input(BenchmarkId::new("workspace", n), &s, |b, s| {
            b.iter(|| KernelWorkspace::new(s).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cauchy_transform", n), &s, |b, s| {
            b.iter(|| cauchy_transform(&s.gamma, &ws))
        });
        group.bench_with_input(BenchmarkId::new("birkhoff_rott", n), &s, |b, s| {
            b.iter(|| birkhoff_rott_velocity(s, &ws))
        });
        let rhs = RealField::from_fn(s.grid(), |a| (2.0 * a).cos());
        group.bench_with_input(BenchmarkId::new("solve_second_kind", n), &rhs, |b, rhs| {
            b.iter(|| solve_second_kind(&SecondKindProblem::new(Sign::Minus, Side::Adjoint, rhs.clone()), &ws).unwrap())
        });
    }
    group.finish();
}

fn dynamics(c: &mut Criterion) {
    let mut group = c.benchmark_group("dynamics");
    group.sample_size(20);
    let model = Model::default();
    for n in [64, 128] {
        let s = wavy_state(n);
        group.bench_with_input(BenchmarkId::new("kinematic_rhs", n), &s, |b, s| {
            b.iter(|| kinematic_rhs(s, &model).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("etd_rk2_step", n), &s, |b, s| {
            b.iter(|| step(s, 1e-3, Scheme::EtdRk2, &model).unwrap())
        });
        let ws = KernelWorkspace::new(&s).unwrap();
        let fields = DerivedFields::compute(&s, &ws, 1.0).unwrap();
        let m = theta_s_sup(&s).unwrap();
        group.bench_with_input(BenchmarkId::new("energy_r4", n), &s, |b, s| {
            b.iter(|| energy(s, &fields, 4, m).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, operators, dynamics);
criterion_main!(benches);
