use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use rand::Rng;

use metafeat_core::geometry::{
    angle_between_vectors, angle_subspace_to_subspace, angle_vector_to_subspace, check_vector_perturbation_bound, check_subspace_perturbation_bound,
    OrthonormalBasis, UnitVector,
};
use metafeat_core::sampling::{rng_from, SeededRng};

fn frame(rng: &mut SeededRng, n: usize, k: usize) -> OrthonormalBasis {
    let mut b = OrthonormalBasis::empty(n);
    while b.rank() < k {
        b.push(UnitVector::random(rng, n).coords()).unwrap();
    }
    b
}

fn orthogonal_to(rng: &mut SeededRng, u: &UnitVector) -> UnitVector {
    loop {
        let r = UnitVector::random(rng, u.dim());
        let d: f64 = r.coords().iter().zip(u.coords()).map(|(a, b)| a * b).sum();
        if let Ok(w) = UnitVector::new(r.coords().iter().zip(u.coords()).map(|(a, b)| a - d * b).collect()) {
            return w;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn vector_angle_is_a_metric(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = rng_from(seed);
        let (u, v, w) = (UnitVector::random(&mut rng, n), UnitVector::random(&mut rng, n), UnitVector::random(&mut rng, n));
        let uv = angle_between_vectors(&u, &v).unwrap();
        prop_assert!((0.0..=PI).contains(&uv));
        prop_assert!((uv - angle_between_vectors(&v, &u).unwrap()).abs() < 1e-12);
        prop_assert!(angle_between_vectors(&u, &u).unwrap() < 1e-7);
        let uw = angle_between_vectors(&u, &w).unwrap();
        let vw = angle_between_vectors(&v, &w).unwrap();
        prop_assert!(uw <= uv + vw + 1e-9);
        prop_assert!((angle_between_vectors(&u, &v.neg()).unwrap() - (PI - uv)).abs() < 1e-9);
    }

    #[test]
    fn rotation_moves_by_the_requested_angle(seed in any::<u64>(), n in 2usize..10, a in 0.0f64..FRAC_PI_2) {
        let mut rng = rng_from(seed);
        let u = UnitVector::random(&mut rng, n);
        let toward = orthogonal_to(&mut rng, &u);
        let r = u.rotate_towards(&toward, a);
        prop_assert!((angle_between_vectors(&u, &r).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn projection_angles(seed in any::<u64>(), n in 2usize..12, kf in 0.0f64..1.0) {
        let mut rng = rng_from(seed);
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let v = frame(&mut rng, n, k);
        prop_assert!(v.max_inner_product_defect() < 1e-10);
        let a = UnitVector::random(&mut rng, n);
        let d = angle_vector_to_subspace(&a, &v).unwrap();
        prop_assert!((0.0..=FRAC_PI_2 + 1e-12).contains(&d));
        for b in v.vectors() {
            let to_b = angle_between_vectors(&a, b).unwrap();
            prop_assert!(d <= to_b.min(PI - to_b) + 1e-9);
        }
        let inside = UnitVector::new(v.lift(&(0..k).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<_>>())).unwrap();
        prop_assert!(angle_vector_to_subspace(&inside, &v).unwrap() < 1e-7);
    }

    #[test]
    fn subspace_angle_symmetry_and_identity(seed in any::<u64>(), n in 3usize..10, kf in 0.0f64..1.0) {
        let mut rng = rng_from(seed);
        let k = 1 + ((n - 2) as f64 * kf) as usize;
        let u = frame(&mut rng, n, k);
        let v = frame(&mut rng, n, k);
        let uv = angle_subspace_to_subspace(&u, &v).unwrap();
        prop_assert!((uv - angle_subspace_to_subspace(&v, &u).unwrap()).abs() < 1e-9);
        // Another basis of the same span.
        let mixed: Vec<UnitVector> =
            (0..k).map(|_| UnitVector::new(u.lift(&(0..k).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<_>>())).unwrap()).collect();
        let same = OrthonormalBasis::span_of(n, &mixed).unwrap();
        prop_assume!(same.rank() == k);
        prop_assert!(angle_subspace_to_subspace(&u, &same).unwrap() < 1e-6);
    }

    #[test]
    fn one_vector_perturbation_bound(seed in any::<u64>(), n in 2usize..=10, kf in 0.0f64..1.0, a in 0.0f64..1.5) {
        let mut rng = rng_from(seed);
        let k = 1 + ((n.min(6) - 2) as f64 * kf) as usize;
        let u = frame(&mut rng, n, k);
        let b = UnitVector::random(&mut rng, n);
        let bt = b.rotate_towards(&orthogonal_to(&mut rng, &b), a);
        let rep = check_vector_perturbation_bound(&u, &b, &bt).unwrap();
        prop_assume!(rep.preconditions_hold() && angle_vector_to_subspace(&b, &u).unwrap() > 1e-6);
        prop_assert!(rep.holds, "measured {} > bound {}", rep.measured, rep.bound);
    }

    #[test]
    fn subspace_perturbation_bound(seed in any::<u64>(), k in 1usize..=6, extra in 1usize..4, gamma in 0.05f64..0.8, frac in 0.01f64..=1.0) {
        let mut rng = rng_from(seed);
        let n = k + extra;
        let eps_acc = gamma * gamma / (10.0 * k as f64) * frac;
        let mut learned: Vec<UnitVector> = Vec::new();
        let mut span = OrthonormalBasis::empty(n.max(1));
        for _ in 0..10_000 {
            if learned.len() == k {
                break;
            }
            let c = UnitVector::random(&mut rng, n);
            if span.is_empty() || angle_vector_to_subspace(&c, &span).unwrap() >= gamma {
                span.push(c.coords()).unwrap();
                learned.push(c);
            }
        }
        prop_assume!(learned.len() == k);
        let truth: Vec<UnitVector> =
            learned.iter().map(|a| a.rotate_towards(&orthogonal_to(&mut rng, a), eps_acc * rng.random::<f64>())).collect();
        let rep = check_subspace_perturbation_bound(&truth, &learned, gamma, eps_acc).unwrap();
        prop_assume!(rep.preconditions_hold());
        prop_assert!(rep.holds, "measured {} > bound {}", rep.measured, rep.bound);
    }
}
