use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use metafeat_core::autoencoder::{build_lp, generate_candidates, solve_sparse_lp};
use metafeat_core::boolean::{solve_consistency, VarSet};
use metafeat_core::geometry::{angle_subspace_to_subspace, OrthonormalBasis, UnitVector};
use metafeat_core::halfspace::averaging_estimate;
use metafeat_core::harness::generate::{planted_anchor_set, planted_anchored};
use metafeat_core::harness::{Scenario, ScenarioConfig};
use metafeat_core::lp::SimplexOptions;
use metafeat_core::polynomial::{mq_interpolate, MultilinearPolynomial};
use metafeat_core::sampling::{rng_from, Distribution, HalfspaceOracle, MqOracle};

fn frame(seed: u64, n: usize, k: usize) -> OrthonormalBasis {
    let mut rng = rng_from(seed);
    let vs: Vec<UnitVector> = (0..k).map(|_| UnitVector::random(&mut rng, n)).collect();
    OrthonormalBasis::span_of(n, &vs).unwrap()
}

fn geometry(c: &mut Criterion) {
    let (u, v) = (frame(1, 60, 6), frame(2, 60, 6));
    c.bench_function("principal_angle_60x6", |b| b.iter(|| angle_subspace_to_subspace(black_box(&u), black_box(&v)).unwrap()));
}

fn halfspace(c: &mut Criterion) {
    let target = UnitVector::random(&mut rng_from(3), 50);
    c.bench_function("averaging_estimate_50d_10k", |b| {
        b.iter(|| {
            let mut o = HalfspaceOracle::new(Distribution::gaussian(50), target.clone(), 4).unwrap();
            averaging_estimate(&mut o, 10_000).unwrap()
        })
    });
}

fn boolean(c: &mut Criterion) {
    let inst = planted_anchored(&mut rng_from(5), 64, 8, 200, false).unwrap();
    c.bench_function("solve_consistency_n64_m200", |b| b.iter(|| solve_consistency(black_box(&inst.targets))));
    let x = inst.targets.targets()[0].clone();
    let y = inst.targets.targets()[1].clone();
    c.bench_function("varset_union_subset_n64", |b| b.iter(|| black_box(&x).union(black_box(&y)).is_subset(&VarSet::full(64))));
}

fn sparse_lp(c: &mut Criterion) {
    let mut cfg = ScenarioConfig::defaults(Scenario::AnchorSet);
    cfg.n = 20;
    cfg.m = 30;
    cfg.metafeatures = 5;
    cfg.k = 3;
    let inst = planted_anchor_set(&mut rng_from(6), &cfg).unwrap();
    let cands = generate_candidates(&inst.ts, 2, 1 << 20).unwrap();
    let lp = build_lp(&cands, &inst.ts, 3).unwrap();
    c.bench_function("covering_lp_n20_ts30", |b| b.iter(|| solve_sparse_lp(black_box(&lp), &SimplexOptions::default()).unwrap()));
}

fn interpolation(c: &mut Criterion) {
    let n = 30;
    let terms: Vec<(VarSet, f64)> = (0..20)
        .map(|i| (VarSet::from_indices(n, [i % n, (3 * i + 1) % n, (7 * i + 2) % n]).unwrap(), 1.0 + i as f64))
        .collect();
    let p = MultilinearPolynomial::from_terms(n, terms).unwrap();
    c.bench_function("mq_interpolate_n30_t20", |b| {
        b.iter(|| {
            let mut mq = MqOracle::new(p.clone());
            mq_interpolate(&mut mq, None, 20).unwrap()
        })
    });
}

criterion_group!(benches, geometry, halfspace, boolean, sparse_lp, interpolation);
criterion_main!(benches);
