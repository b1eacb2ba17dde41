use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shapemem_core::bvp::BvpProblem;
use shapemem_core::fem::space::assemble_a_nu;
use shapemem_core::fem::FeSpace;
use shapemem_core::MaterialParams;

fn assemble(c: &mut Criterion) {
    let p = MaterialParams {
        nu: 0.01,
        ..Default::default()
    };
    let mut group = c.benchmark_group("assemble_a_nu");
    for n in [2, 4, 8] {
        let space = FeSpace::unit_cube(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &space, |b, s| {
            b.iter(|| assemble_a_nu(s, &p))
        });
    }
    group.finish();
}

fn bvp_step(c: &mut Criterion) {
    let pb = BvpProblem::tension_cube(2.5);
    let mut group = c.benchmark_group("bvp_step_at_peak");
    group.sample_size(10);
    for n in [2, 4] {
        let model = pb.model(0.1, 0.01, n).unwrap();
        let step = model.step_data(&pb.load, 0.5, &vec![0.0; 5 * model.n_nodes()]);
        let start = model.space.zeros();
        group.bench_with_input(BenchmarkId::from_parameter(n), &step, |b, st| {
            b.iter(|| model.solve_step(st, &start).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assemble, bvp_step);
criterion_main!(benches);
