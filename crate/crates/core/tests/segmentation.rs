//! Cooperative-cut segmentation against naive and exhaustive evaluation.

use c2f_core::c2f::{get_init_state, run_c2f, run_flat, LevelSolver, RefinementSchedule};
use c2f_core::image::RgbImage;
use c2f_core::mrf::Label;
use c2f_core::pipelines::segmentation::{
    build_segmentation_mrf, cogc_energy, greedy_aux_descent, plain_pairwise_mrf, AuxiliaryState, ConcaveF,
    CoopCutSolver, Piece, SegmentationParams, SegmentationProblem,
};
use c2f_core::solvers::{alpha_expansion, StoppingCriteria};
use c2f_core::synth::spike_probe;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(w: usize, h: usize, nl: usize, seed: u64) -> SegmentationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = RgbImage::filled(w, h, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            img.set_pixel(x, y, [rng.random(), rng.random(), rng.random()]);
        }
    }
    let mut seeds = vec![None; w * h];
    for (l, s) in seeds.iter_mut().take(nl).enumerate() {
        *s = Some(l);
    }
    let params = SegmentationParams {
        num_color_bins: 3,
        cell_size: 2,
        edge_strength: 3.0,
        concave: ConcaveF { theta: 2.0, slope: 0.3 },
        ..Default::default()
    };
    SegmentationProblem::new(img, seeds, nl, params).unwrap()
}

/// Double loop over (group, label), scanning every edge in both orientations.
fn naive_cogc(p: &SegmentationProblem, x: &[Label]) -> f64 {
    let nl = p.num_labels();
    let u = p.unaries().unwrap();
    let f = p.params().concave;
    let mut total: f64 = (0..x.len()).map(|i| u[i * nl + x[i]]).sum();
    for g in 0..p.groups().num_groups() {
        for l in 0..nl {
            let mut z = 0.0;
            for (k, &(a, b)) in p.groups().edges().iter().enumerate() {
                if p.groups().group_of(k) != g {
                    continue;
                }
                for (i, j) in [(a, b), (b, a)] {
                    if x[i] == l && x[j] != l {
                        z += p.weights()[k];
                    }
                }
            }
            total += z.min(f.theta + f.slope * (z - f.theta));
        }
    }
    total
}

#[test]
fn cogc_energy_matches_naive_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..30 {
        let nl = 2 + seed as usize % 2;
        let p = random_problem(5, 4, nl, seed);
        let x: Vec<Label> = (0..20).map(|_| rng.random_range(0..nl)).collect();
        let got = cogc_energy(&p, &x).unwrap();
        assert!((got - naive_cogc(&p, &x)).abs() <= 1e-9 * got.abs().max(1.0));
    }
}

#[test]
fn linearization_upper_bounds_and_is_tight_at_greedy_pieces() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..20 {
        let p = random_problem(4, 4, 3, seed);
        let x: Vec<Label> = (0..16).map(|_| rng.random_range(0..3)).collect();
        let exact = cogc_energy(&p, &x).unwrap();
        let mut aux = AuxiliaryState::for_problem(&p);
        for g in 0..aux.num_groups() {
            for l in 0..3 {
                if rng.random_bool(0.5) {
                    aux.set(g, l, Piece::Shallow);
                }
            }
        }
        let bound = build_segmentation_mrf(&p, &aux).unwrap().energy(&x).unwrap();
        assert!(bound >= exact - 1e-9);
        let tight = build_segmentation_mrf(&p, &AuxiliaryState::greedy(&p, &x).unwrap()).unwrap();
        assert!((tight.energy(&x).unwrap() - exact).abs() <= 1e-9);
    }
}

fn brute_force_cogc(p: &SegmentationProblem) -> (Vec<Label>, f64) {
    let n = p.num_vars();
    (0u32..1 << n)
        .map(|mask| {
            let x: Vec<Label> = (0..n).map(|i| (mask >> i & 1) as usize).collect();
            let e = cogc_energy(p, &x).unwrap();
            (x, e)
        })
        .fold((Vec::new(), f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

#[test]
fn descent_within_ten_percent_of_exhaustive_minimum() {
    for seed in 0..20 {
        let p = random_problem(3, 3, 2, seed);
        let (_, opt) = brute_force_cogc(&p);
        let start = get_init_state(&plain_pairwise_mrf(&p).unwrap());
        let r = greedy_aux_descent(&p, &start, &StoppingCriteria::new(2)).unwrap();
        assert!(r.energy >= opt - 1e-9);
        assert!(r.energy <= 1.1 * opt + 1e-9, "seed {seed}: {} vs {opt}", r.energy);
        assert!(r.trace.is_non_increasing(0.0));
    }
}

#[test]
fn descent_from_optimum_changes_nothing() {
    for seed in 0..5 {
        let p = random_problem(3, 3, 2, seed);
        let (x, opt) = brute_force_cogc(&p);
        let r = greedy_aux_descent(&p, &x, &StoppingCriteria::new(2)).unwrap();
        assert_eq!(r.assignment, x);
        assert!(r.trace.rows().iter().all(|row| row.energy == opt));
    }
}

#[test]
fn solver_outputs_respect_seeds() {
    let crit = StoppingCriteria::new(2);
    for w in 1..=3 {
        let s = spike_probe(16, w, w as u64);
        let p = SegmentationProblem::new(s.image, s.seeds.clone(), 2, SegmentationParams::default()).unwrap();
        let plain = plain_pairwise_mrf(&p).unwrap();
        let mut solver = CoopCutSolver::new(&p).unwrap();
        let schedule = RefinementSchedule::cp_chain(&[(1, 2), (1, 3)], crit.clone()).unwrap();
        let outputs = [
            alpha_expansion(&plain, &get_init_state(&plain), &crit).unwrap().assignment,
            run_flat(&mut solver, &crit, None).unwrap().assignment,
            run_c2f(&plain, &schedule, &mut solver, None).unwrap().assignment,
        ];
        for x in &outputs {
            for (i, seed) in s.seeds.iter().enumerate() {
                if let Some(l) = seed {
                    assert_eq!(x[i], *l);
                }
            }
        }
    }
}

#[test]
fn reduced_levels_agree_with_full_energy() {
    let p = random_problem(6, 6, 3, 9);
    let mut solver = CoopCutSolver::new(&p).unwrap();
    let cp_model = solver.cp_model().unwrap();
    let q = c2f_core::color_passing::cp(&cp_model, 2, 1).unwrap();
    let level = solver.prepare(Some(&q)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let y: Vec<Label> = (0..q.num_elements()).map(|_| rng.random_range(0..3)).collect();
        let x = c2f_core::partition::expand(&q, &y).unwrap();
        assert!((solver.energy(&level, &y) - cogc_energy(&p, &x).unwrap()).abs() <= 1e-9);
    }
}
