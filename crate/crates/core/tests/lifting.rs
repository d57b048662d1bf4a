//! Reduced-model energies, refinement order and the coarse-to-fine driver.

use c2f_core::c2f::{run_c2f, run_flat, MrfSolver, RefinementSchedule, HANDOFF_TOLERANCE};
use c2f_core::color_passing::{color_passing_round, cp, init_colors, run_to_fixed_point, split_by_next_label};
use c2f_core::mrf::Label;
use c2f_core::partition::{build_reduced, expand, reduced_energy, Partition};
use c2f_core::solvers::StoppingCriteria;
use c2f_core::synth::{random_grid_mrf, RandomPairwise};
use c2f_core::TraceEvent;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = RandomPairwise> {
    prop_oneof![Just(RandomPairwise::Potts), Just(RandomPairwise::TruncatedLinear), Just(RandomPairwise::Dense)]
}

/// Odometer over `k` variables with `nl` labels.
fn all_assignments(k: usize, nl: usize) -> impl Iterator<Item = Vec<Label>> {
    let total = nl.pow(k as u32);
    (0..total).map(move |mut c| {
        (0..k)
            .map(|_| {
                let l = c % nl;
                c /= nl;
                l
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn reduced_energy_equals_expanded_energy(
        w in 1usize..=5,
        h in 1usize..=5,
        nl in 1usize..=4,
        kind in kind(),
        seed in any::<u64>(),
        keys in prop::collection::vec(0usize..6, 25),
        labels in prop::collection::vec(0usize..4, 25),
    ) {
        let m = random_grid_mrf(w, h, nl, kind, seed);
        let p = Partition::from_keys(&keys[..w * h]);
        let rm = build_reduced(&m, &p).unwrap();
        let y: Vec<Label> = labels[..p.num_elements()].iter().map(|&l| l % nl).collect();
        let lifted = reduced_energy(&rm, &y).unwrap();
        let flat = m.energy(&expand(&p, &y).unwrap()).unwrap();
        prop_assert!((lifted - flat).abs() <= 1e-9, "{lifted} vs {flat}");
    }
}

#[test]
fn reduced_optimum_never_beats_flat_optimum() {
    for seed in 0..20u64 {
        let kind = [RandomPairwise::Potts, RandomPairwise::TruncatedLinear, RandomPairwise::Dense][seed as usize % 3];
        let m = random_grid_mrf(3, 3, 2, kind, seed);
        let opt = m.brute_force_map().unwrap().1;
        for p in [cp(&m, 1, 1).unwrap(), cp(&m, 2, 2).unwrap(), Partition::single(9)] {
            let rm = build_reduced(&m, &p).unwrap();
            let best = all_assignments(p.num_elements(), 2)
                .map(|y| reduced_energy(&rm, &y).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best >= opt - 1e-9, "seed {seed}");
        }
        let rm = build_reduced(&m, &Partition::degenerate(9)).unwrap();
        let best = all_assignments(9, 2).map(|y| reduced_energy(&rm, &y).unwrap()).fold(f64::INFINITY, f64::min);
        assert!((best - opt).abs() <= 1e-9);
    }
}

#[test]
fn color_passing_refines_monotonically() {
    for seed in 0..20u64 {
        let kind = [RandomPairwise::Potts, RandomPairwise::TruncatedLinear, RandomPairwise::Dense][seed as usize % 3];
        let m = random_grid_mrf(4, 4, 3, kind, seed);
        for nl in 1..=3 {
            let mut s = init_colors(&m, nl).unwrap();
            for _ in 0..4 {
                let next = color_passing_round(&s, &m).unwrap();
                assert!(s.partition().is_coarser(&next.partition()).unwrap(), "seed {seed} CP({nl}, n)");
                if nl < 3 {
                    let split = split_by_next_label(&s, &m).unwrap();
                    assert!(s.partition().is_coarser(&split.partition()).unwrap());
                }
                s = next;
            }
        }
        let (fixed, rounds) = run_to_fixed_point(&m, init_colors(&m, 1).unwrap(), m.num_vars()).unwrap();
        assert!(rounds <= m.num_vars());
        let again = color_passing_round(&fixed, &m).unwrap();
        assert_eq!(again.num_var_colors(), fixed.num_var_colors());
    }
}

#[test]
fn cp_orders_by_label_depth_and_rounds() {
    let m = random_grid_mrf(8, 8, 4, RandomPairwise::TruncatedLinear, 42);
    let base = cp(&m, 1, 1).unwrap();
    assert!(base.is_coarser(&cp(&m, 2, 1).unwrap()).unwrap());
    assert!(base.is_coarser(&cp(&m, 1, 2).unwrap()).unwrap());
}

#[test]
fn hand_offs_preserve_energy() {
    let crit = StoppingCriteria::new(3);
    for seed in 0..10u64 {
        let m = random_grid_mrf(6, 5, 4, RandomPairwise::TruncatedLinear, seed);
        let schedule = RefinementSchedule::cp_chain(&[(1, 1), (2, 1), (3, 1)], crit.clone()).unwrap();
        let r = run_c2f(&m, &schedule, &mut MrfSolver::expansion(&m), None).unwrap();
        let rows = r.trace.rows();
        for (k, row) in rows.iter().enumerate().filter(|(_, r)| r.event == TraceEvent::Refine) {
            let before = rows[k - 1].energy;
            assert!((row.energy - before).abs() <= HANDOFF_TOLERANCE * before.abs().max(1.0));
        }
        assert!(r.trace.is_non_increasing(1e-9));
        assert!((m.energy(&r.assignment).unwrap() - r.energy).abs() <= 1e-9);
    }
}

#[test]
fn degenerate_schedule_reproduces_flat() {
    let crit = StoppingCriteria::new(4);
    for seed in 0..5u64 {
        let m = random_grid_mrf(7, 6, 5, RandomPairwise::Potts, seed);
        let flat = run_flat(&mut MrfSolver::expansion(&m), &crit, None).unwrap();
        let lifted = run_c2f(&m, &RefinementSchedule::flat(crit.clone()).unwrap(), &mut MrfSolver::expansion(&m), None).unwrap();
        assert_eq!(flat.assignment, lifted.assignment);
        assert_eq!(flat.energy, lifted.energy);
    }
}
