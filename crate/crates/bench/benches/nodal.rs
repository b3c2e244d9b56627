use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nodal_core::graph::CycleFrame;
use nodal_core::{fixtures, kuramoto, magnetic, nodal, random, Tolerances};

fn diamond(c: &mut Criterion) {
    let inst = fixtures::diamond();
    let tol = Tolerances::default();
    c.bench_function("diamond/all_routes", |b| {
        b.iter(|| {
            let eig = inst.matrix.eigensystem(tol).unwrap();
            for k in 1..=4 {
                black_box(nodal::verify_all_routes(&inst.matrix, &eig, k, &inst.frame, tol).unwrap());
            }
        })
    });
    c.bench_function("diamond/fd_hessian", |b| {
        b.iter(|| {
            magnetic::finite_difference_hessian(&inst.matrix, 2, &inst.frame, magnetic::DEFAULT_FD_STEP, tol)
                .unwrap()
        })
    });
}

fn random_instances(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut group = c.benchmark_group("verify_main_theorem");
    for n in [8usize, 32, 128] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let (m, frame) = loop {
            let g = random::connected_graph(&mut rng, n, (4.0 / n as f64).min(0.6));
            let m = random::supported_matrix(&mut rng, &g);
            let frame = CycleFrame::fundamental(m.graph());
            if nodal::verify_main_theorem(&m, 1, tol).is_ok() {
                break (m, frame);
            }
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| {
                let eig = m.eigensystem(tol).unwrap();
                nodal::verify_with(m, &eig, 1, &frame, tol).unwrap()
            })
        });
    }
    group.finish();
}

fn kuramoto_search(c: &mut Criterion) {
    let sys = fixtures::kuramoto_example();
    let mut group = c.benchmark_group("kuramoto");
    group.sample_size(10);
    group.bench_function("find_fixed_points/1000", |b| {
        b.iter(|| kuramoto::find_fixed_points(&sys, 1000, 0))
    });
    group.finish();
}

criterion_group!(benches, diamond, random_instances, kuramoto_search);
criterion_main!(benches);
