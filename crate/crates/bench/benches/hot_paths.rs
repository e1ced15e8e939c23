use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gftlqr_bench::{sample_controller, showcase_case};
use gftlqr_core::dynamics::{linearize, rk4_step};
use gftlqr_core::gft::gft_control_step;
use gftlqr_core::harness::{simulate_case, GftLaw};
use gftlqr_core::riccati::solve_care;
use gftlqr_core::{CoriolisVariant, LqrWeights, ManipulatorParams, SimConfig, State4};
use nalgebra::{DMatrix, Vector2};

fn care(c: &mut Criterion) {
    let p = ManipulatorParams::reference();
    let (a, b) = linearize(&p, &Vector2::new(0.4, 1.2)).unwrap();
    let w = LqrWeights::new([100.0, 100.0, 10.0, 10.0], 1e-4);
    let a = DMatrix::from_column_slice(4, 4, a.as_slice());
    let b = DMatrix::from_column_slice(4, 2, b.as_slice());
    let q = DMatrix::from_column_slice(4, 4, w.q_matrix().as_slice());
    let r = DMatrix::from_column_slice(2, 2, w.r_matrix().as_slice());
    c.bench_function("solve_care_4x2", |bch| {
        bch.iter(|| solve_care(black_box(&a), black_box(&b), black_box(&q), black_box(&r)).unwrap())
    });
}

fn integrator(c: &mut Criterion) {
    let p = ManipulatorParams::reference();
    let x = State4::new(0.3, 1.1, 0.8, -0.6);
    let tau = Vector2::new(40.0, -10.0);
    c.bench_function("rk4_step", |bch| {
        bch.iter(|| rk4_step(&p, black_box(&x), &tau, 0.0167, CoriolisVariant::PaperVerbatim).unwrap())
    });
}

fn control_step(c: &mut Criterion) {
    let p = ManipulatorParams::reference();
    let ctrl = sample_controller();
    let x = State4::new(0.3, 1.1, 0.8, -0.6);
    let target = State4::at_rest(1.5, 0.7);
    let limits = Some(p.tau_max);
    c.bench_function("gft_control_step", |bch| {
        bch.iter(|| gft_control_step(&ctrl, &p, black_box(&x), &target, limits.as_ref()).unwrap())
    });
}

fn full_case(c: &mut Criterion) {
    let p = ManipulatorParams::reference();
    let cfg = SimConfig::default();
    let ctrl = sample_controller();
    let case = showcase_case();
    let law = GftLaw {
        controller: &ctrl,
        model: p,
        limits: cfg.limits(&p),
    };
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    group.bench_function("gft_showcase_case", |bch| {
        bch.iter(|| simulate_case(&law, black_box(&case), &p, &cfg))
    });
    group.finish();
}

criterion_group!(benches, care, integrator, control_step, full_case);
criterion_main!(benches);
