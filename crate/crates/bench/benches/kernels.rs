use std::hint::black_box;

use ccss_bench::{reference_pair, ten_su_network};
use ccss_core::fusion::{lrt_log_statistic, report_density};
use ccss_core::local_detect::{pd_with, threshold_from_pf};
use ccss_core::nfg::{ccss_graph, random_tree_factorization, run_spa};
use ccss_core::rng::stream_rng;
use ccss_core::simkit::{simulate, Hypothesis};
use ccss_core::specfun::{humbert_phi2, kummer_1f1, marcum_q};
use ccss_core::PdRoute;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn special_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("specfun");
    g.bench_function("kummer_1f1", |b| b.iter(|| kummer_1f1(black_box(2.5), 21.0, black_box(17.3))));
    g.bench_function("humbert_phi2", |b| {
        b.iter(|| humbert_phi2(black_box(2.0), 1.0, 22.0, black_box(14.1), 15.0))
    });
    g.bench_function("marcum_q", |b| b.iter(|| marcum_q(20, black_box(4.2), black_box(7.7))));
    g.bench_function("threshold_from_pf", |b| b.iter(|| threshold_from_pf(20, 1.0, black_box(0.03))));
    g.finish();
}

fn detection_routes(c: &mut Criterion) {
    let mut g = c.benchmark_group("pd");
    for (name, route, m) in [
        ("phi2_m2", PdRoute::Phi2, 2.0),
        ("closed_m2", PdRoute::Closed, 2.0),
        ("closed_m1", PdRoute::Closed, 1.0),
        ("complex_m2", PdRoute::Complex, 2.0),
        ("numeric_m1.5", PdRoute::Numeric, 1.5),
    ] {
        let (link, spec) = reference_pair(m, 10.0);
        g.bench_function(name, |b| b.iter(|| pd_with(route, black_box(&link), &spec)));
    }
    g.finish();
}

fn fusion(c: &mut Criterion) {
    let mut g = c.benchmark_group("fusion");
    for m in [1.0, 1.5, 2.0] {
        let (link, _) = reference_pair(m, 4.0);
        g.bench_with_input(BenchmarkId::new("report_density", m), &link, |b, l| {
            b.iter(|| report_density(black_box(0.7), 1, l))
        });
    }
    let prep = ten_su_network(1.0).prepare().expect("valid scenario");
    let ys = [0.3, -1.2, 0.8, 1.9, -0.4, 0.1, 2.2, -0.9, 1.1, 0.5];
    g.bench_function("lrt_k10", |b| b.iter(|| lrt_log_statistic(black_box(&ys), &prep.branches)));
    g.finish();
}

fn graphs(c: &mut Criterion) {
    let mut g = c.benchmark_group("nfg");
    let mut rng = stream_rng(3, 0, 0);
    let tree = random_tree_factorization(&mut rng, 10, 4).to_graph().expect("tree").0;
    g.bench_function("spa_random_tree", |b| b.iter(|| run_spa(black_box(&tree))));
    let ccss = ccss_graph(10, 2).expect("graph");
    g.bench_function("spa_ccss_k10", |b| b.iter(|| run_spa(black_box(&ccss))));
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("simkit");
    g.sample_size(10);
    let prep = ten_su_network(1.0).prepare().expect("valid scenario");
    for with_lrt in [false, true] {
        g.bench_with_input(BenchmarkId::new("10k_trials_k10_lrt", with_lrt), &with_lrt, |b, &w| {
            b.iter(|| simulate(&prep, Hypothesis::H1, 10_000, 1, w))
        });
    }
    g.finish();
}

criterion_group!(benches, special_functions, detection_routes, fusion, graphs, monte_carlo);
criterion_main!(benches);
