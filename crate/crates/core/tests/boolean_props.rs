use proptest::prelude::*;

use metafeat_core::autoencoder::{parse_decompositions, parse_images, write_decompositions, write_images};
use metafeat_core::boolean::{brute_force_set_basis, parse_bool, solve_consistency, write_bool, TargetSet, VarSet};
use metafeat_core::conjunction::{eq_dictionary_session, eq_learn_conjunction, winnow_eq_learn, winnow_mistake_bound, WinnowOutcome};
use metafeat_core::harness::generate::planted_anchored;
use metafeat_core::sampling::{rng_from, ConjunctionEqOracle};

fn varset(n: usize) -> impl Strategy<Value = VarSet> {
    prop::collection::vec(any::<bool>(), n).prop_map(move |bits| {
        VarSet::from_indices(n, bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)).unwrap()
    })
}

fn sized_pair() -> impl Strategy<Value = (VarSet, VarSet, VarSet)> {
    (1usize..150).prop_flat_map(|n| (varset(n), varset(n), varset(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn set_algebra((a, b, c) in sized_pair()) {
        prop_assert_eq!(a.union(&b).len() + a.intersect(&b).len(), a.len() + b.len());
        prop_assert!(a.intersect(&b).is_subset(&a) && a.is_subset(&a.union(&b)));
        prop_assert_eq!(a.difference(&b).len(), a.len() - a.intersect(&b).len());
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(a.union(&b.intersect(&c)), a.union(&b).intersect(&a.union(&c)));
        prop_assert_eq!(a.is_subset(&b), a.difference(&b).is_empty());
        prop_assert_eq!(a.intersects(&b), !a.intersect(&b).is_empty());
        prop_assert_eq!(a.cmp(&b) == std::cmp::Ordering::Equal, a == b);
        prop_assert_eq!(a.iter().count(), a.len());
    }

    #[test]
    fn bool_round_trip(sets in prop::collection::vec(varset(40), 0..12)) {
        let (n, back) = parse_bool(&write_bool(40, &sets)).unwrap();
        prop_assert_eq!(n, 40);
        prop_assert_eq!(back, sets);
    }

    #[test]
    fn img_round_trip(w in 1usize..8, h in 1usize..6, seed in any::<u64>(), count in 0usize..6) {
        let n = w * h;
        let mut rng = rng_from(seed);
        let dist = metafeat_core::sampling::Distribution::uniform_cube(n);
        let imgs: Vec<VarSet> = (0..count).map(|_| dist.draw_bits(&mut rng)).collect();
        prop_assert_eq!(parse_images(&write_images(w, h, &imgs)).unwrap(), (w, h, imgs));
    }

    #[test]
    fn decomposition_round_trip(rows in prop::collection::vec(prop::collection::btree_set(0usize..9, 0..5), 0..8)) {
        let rows: Vec<Vec<usize>> = rows.into_iter().map(|s| s.into_iter().collect()).collect();
        prop_assert_eq!(parse_decompositions(&write_decompositions(9, &rows)).unwrap(), rows);
    }

    #[test]
    fn closure_is_tightest_common_superset(targets in prop::collection::vec(varset(12), 1..8), y in varset(12)) {
        let ts = TargetSet::from_targets(12, targets.clone()).unwrap();
        match ts.closure(&y) {
            None => prop_assert!(targets.iter().all(|t| !y.is_subset(t))),
            Some(c) => {
                prop_assert!(y.is_subset(&c));
                for t in targets.iter().filter(|t| y.is_subset(t)) {
                    prop_assert!(c.is_subset(t));
                }
            }
        }
    }

    #[test]
    fn anchored_consistency_is_sound_and_small(seed in any::<u64>(), n in 3usize..=10, k in 1usize..=4, m in 1usize..10) {
        prop_assume!(k <= n);
        let inst = planted_anchored(&mut rng_from(seed), n, k, m, false).unwrap();
        prop_assert!(inst.assumption_violations().is_empty());
        let d = solve_consistency(&inst.targets);
        prop_assert!(d.reconstructs(&inst.targets));
        prop_assert!(inst.dictionary_violations(&d).is_empty());
        let opt = brute_force_set_basis(&inst.targets, k).unwrap().expect("planted basis has size ≤ k");
        prop_assert!(opt.len() <= d.len() && d.len() <= k);
    }

    #[test]
    fn elimination_learns_exactly(t in varset(30)) {
        let mut o = ConjunctionEqOracle::new(t.clone());
        let r = eq_learn_conjunction(&mut o).unwrap();
        prop_assert_eq!(r.hypothesis, t);
        prop_assert!(r.queries <= 31);
    }

    #[test]
    fn winnow_learns_expressible_targets(seed in any::<u64>(), nf in 2usize..12, pick in prop::collection::btree_set(0usize..12, 1..=3)) {
        let n = 16;
        let mut rng = rng_from(seed);
        let dist = metafeat_core::sampling::Distribution::uniform_cube(n);
        let features: Vec<VarSet> = (0..nf).map(|_| {
            let a = dist.draw_bits(&mut rng);
            a.intersect(&dist.draw_bits(&mut rng))
        }).collect();
        let chosen: Vec<usize> = pick.into_iter().filter(|&j| j < nf).collect();
        prop_assume!(!chosen.is_empty());
        let mut target = VarSet::empty(n);
        chosen.iter().for_each(|&j| target.union_with(&features[j]));
        let mut o = ConjunctionEqOracle::new(target.clone());
        match winnow_eq_learn(&mut o, &features, chosen.len()).unwrap() {
            WinnowOutcome::Learned { hypothesis, mistakes, .. } => {
                prop_assert_eq!(hypothesis, target);
                prop_assert!(mistakes <= winnow_mistake_bound(chosen.len(), nf));
            }
            WinnowOutcome::NotExpressible { .. } => prop_assert!(false, "expressible target rejected"),
        }
    }

    #[test]
    fn dictionary_session_is_exact(seed in any::<u64>(), m in 1usize..30) {
        let inst = planted_anchored(&mut rng_from(seed), 10, 3, m, false).unwrap();
        let s = eq_dictionary_session(inst.targets.targets(), 10).unwrap();
        prop_assert_eq!(&s.hypotheses[..], inst.targets.targets());
        prop_assert!(s.total_cost() <= (m * 4 + 103 * 11) as u64);
    }
}
