use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use c2f_core::c2f::{get_init_state, run_c2f, run_flat, MrfSolver, RefinementSchedule};
use c2f_core::color_passing::cp;
use c2f_core::pipelines::stereo::{build_stereo_mrf, StereoParams, StereoProblem};
use c2f_core::solvers::{alpha_expansion_move, max_flow, FlowNetwork, StoppingCriteria};
use c2f_core::synth::stereo_scene;
use c2f_core::LabeledMrf;

fn stereo_mrf(size: usize, labels: usize) -> LabeledMrf {
    let s = stereo_scene(size, size, labels, 1);
    let params = StereoParams { max_disparity: labels, ..Default::default() };
    build_stereo_mrf(&StereoProblem::new(s.left, s.right, params).unwrap()).unwrap()
}

// Grid with source and sink links on every pixel, the shape of one
// expansion move.
fn grid_network(side: usize) -> FlowNetwork {
    let n = side * side;
    let mut net = FlowNetwork::new(n + 2, n, n + 1).unwrap();
    for i in 0..n {
        let h = (i * 2_654_435_761) % 97;
        net.add_arc(n, i, (h % 13) as f64).unwrap();
        net.add_arc(i, n + 1, (h / 13) as f64).unwrap();
        for j in [i + 1, i + side] {
            if (j == i + 1 && (i + 1) % side == 0) || j >= n {
                continue;
            }
            net.add_arc(i, j, 2.0).unwrap();
            net.add_arc(j, i, 2.0).unwrap();
        }
    }
    net
}

fn bench_max_flow(c: &mut Criterion) {
    let mut g = c.benchmark_group("max_flow");
    for side in [32, 64, 96] {
        let net = grid_network(side);
        g.bench_with_input(BenchmarkId::from_parameter(side), &net, |b, net| b.iter(|| max_flow(black_box(net)).value));
    }
    g.finish();
}

fn bench_expansion_move(c: &mut Criterion) {
    let m = stereo_mrf(64, 24);
    let x = get_init_state(&m);
    c.bench_function("expansion_move/64x64x24", |b| b.iter(|| alpha_expansion_move(&m, black_box(&x), 10).unwrap()));
}

fn bench_color_passing(c: &mut Criterion) {
    let m = stereo_mrf(96, 32);
    let mut g = c.benchmark_group("color_passing");
    for (nl, it) in [(1, 1), (2, 1), (3, 1), (1, 3)] {
        g.bench_function(format!("cp({nl},{it})"), |b| b.iter(|| cp(&m, nl, it).unwrap().num_elements()));
    }
    g.finish();
}

fn bench_schedules(c: &mut Criterion) {
    let m = stereo_mrf(48, 16);
    let crit = StoppingCriteria::new(4);
    let mut g = c.benchmark_group("solve/48x48x16");
    g.sample_size(10);
    g.bench_function("flat", |b| b.iter(|| run_flat(&mut MrfSolver::expansion(&m), &crit, None).unwrap().energy));
    let schedule = RefinementSchedule::parse("1:1,2:1,3:1", crit.clone()).unwrap();
    g.bench_function("c2f", |b| b.iter(|| run_c2f(&m, &schedule, &mut MrfSolver::expansion(&m), None).unwrap().energy));
    g.finish();
}

criterion_group!(benches, bench_max_flow, bench_expansion_move, bench_color_passing, bench_schedules);
criterion_main!(benches);
