use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hybrid_repeater::backbone::{bb_state, eta_bb};
use hybrid_repeater::edge::{en_double_state, en_single_state};
use hybrid_repeater::optimizer::{optimize, OptimizerOptions};
use hybrid_repeater::oracle::oracle_bb;
use hybrid_repeater::pipeline::evaluate;
use hybrid_repeater::scheduling::Protocol;
use hybrid_repeater::swaps::{dc_swap_chain, swap1, Topology};
use hybrid_repeater::{EmissionSettings, HardwareParams};

fn params() -> HardwareParams {
    HardwareParams::from_intrinsic(0.8, 0.5)
}

fn closed_forms(c: &mut Criterion) {
    let p = params();
    let eta = eta_bb(200.0, 4, &p).unwrap();
    let a = en_single_state(&p, 1e-2, 1e-3).unwrap();
    let b = bb_state(&p, eta, 1e-3).unwrap();
    c.bench_function("swap1 closed form", |bn| bn.iter(|| swap1(black_box(&p), black_box(&a), black_box(&b))));
    let s = EmissionSettings::new(1e-2, 1e-3, 1e-3);
    c.bench_function("evaluate tsc repeater", |bn| {
        bn.iter(|| evaluate(black_box(&p), Protocol::Tsc, Topology::Repeater, 200.0, &s))
    });
}

fn engine(c: &mut Criterion) {
    let p = params();
    let eta = eta_bb(200.0, 4, &p).unwrap();
    let en = en_double_state(&p, 1e-3).unwrap();
    let b = bb_state(&p, eta, 1e-3).unwrap();
    let mut g = c.benchmark_group("fock engine");
    g.sample_size(20);
    g.bench_function("dc chain repeater", |bn| {
        bn.iter(|| dc_swap_chain(black_box(&p), &en, &en, &[b; 4], Topology::Repeater))
    });
    g.bench_function("backbone oracle", |bn| bn.iter(|| oracle_bb(black_box(&p), eta, 1e-3)));
    g.finish();
}

fn optimizer(c: &mut Criterion) {
    let p = params();
    let opts = OptimizerOptions::default();
    let mut g = c.benchmark_group("optimizer");
    g.sample_size(10);
    g.bench_function("tsc repeater 200 km", |bn| {
        bn.iter(|| optimize(black_box(&p), Protocol::Tsc, Topology::Repeater, 200.0, 0.9, &opts))
    });
    g.finish();
}

criterion_group!(benches, closed_forms, engine, optimizer);
criterion_main!(benches);
