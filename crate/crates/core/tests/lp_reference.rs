// The floating simplex against exact vertex enumeration over the rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use metafeat_core::lp::{solve_lp, Cmp, LinearProgram, LpStatus, SimplexOptions};

type Q = BigRational;

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Rows as `(coeffs, cmp, rhs)` including nonnegativity, all integers.
fn all_rows(lp: &[(Vec<i64>, Cmp, i64)], n: usize) -> Vec<(Vec<Q>, Cmp, Q)> {
    let mut rows: Vec<(Vec<Q>, Cmp, Q)> =
        lp.iter().map(|(a, c, b)| (a.iter().map(|&v| q(v)).collect(), *c, q(*b))).collect();
    for i in 0..n {
        let mut e = vec![q(0); n];
        e[i] = q(1);
        rows.push((e, Cmp::Ge, q(0)));
    }
    rows
}

fn solve_square(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..n {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
                let d = &f * &b[col];
                b[r] -= d;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn feasible(rows: &[(Vec<Q>, Cmp, Q)], x: &[Q]) -> bool {
    rows.iter().all(|(a, c, b)| {
        let lhs: Q = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
        match c {
            Cmp::Le => lhs <= *b,
            Cmp::Ge => lhs >= *b,
            Cmp::Eq => lhs == *b,
        }
    })
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            go(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum over feasible vertices; `None` when the bounded region is empty.
fn vertex_optimum(obj: &[i64], lp: &[(Vec<i64>, Cmp, i64)]) -> Option<Q> {
    let n = obj.len();
    let rows = all_rows(lp, n);
    let mut best: Option<Q> = None;
    for pick in combinations(rows.len(), n) {
        let a: Vec<Vec<Q>> = pick.iter().map(|&r| rows[r].0.clone()).collect();
        let b: Vec<Q> = pick.iter().map(|&r| rows[r].2.clone()).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&rows, &x) {
                let v: Q = obj.iter().zip(&x).map(|(c, xi)| q(*c) * xi).sum();
                if best.as_ref().is_none_or(|bv| v < *bv) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

fn cmp_strategy() -> impl Strategy<Value = Cmp> {
    prop_oneof![Just(Cmp::Le), Just(Cmp::Ge), Just(Cmp::Eq)]
}

fn lp_strategy() -> impl Strategy<Value = (Vec<i64>, Vec<(Vec<i64>, Cmp, i64)>)> {
    (1usize..=3).prop_flat_map(|n| {
        let obj = prop::collection::vec(-4i64..=4, n);
        let rows = prop::collection::vec((prop::collection::vec(-3i64..=3, n), cmp_strategy(), -4i64..=8), 0..=4);
        let boxes = prop::collection::vec(1i64..=5, n);
        (obj, rows, boxes).prop_map(move |(obj, mut rows, boxes)| {
            for (i, u) in boxes.into_iter().enumerate() {
                let mut e = vec![0; obj.len()];
                e[i] = 1;
                rows.push((e, Cmp::Le, u));
            }
            (obj, rows)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration((obj, rows) in lp_strategy()) {
        let mut lp = LinearProgram::new(obj.iter().map(|&c| c as f64).collect());
        for (a, c, b) in &rows {
            lp.add(a.iter().map(|&v| v as f64).collect(), *c, *b as f64);
        }
        let sol = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        match vertex_optimum(&obj, &rows) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(opt) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                let exact = opt.to_f64().unwrap();
                prop_assert!((sol.objective - exact).abs() <= 1e-7 * (1.0 + exact.abs()),
                    "simplex {} vs exact {}", sol.objective, exact);
                prop_assert!(lp.violations(&sol.values, 1e-7).is_empty());
                prop_assert!((lp.objective_at(&sol.values) - sol.objective).abs() <= 1e-7);
            }
        }
    }
}

#[test]
fn oracle_sanity() {
    // min -x - y with x + y <= 3, x <= 2, y <= 2: optimum -3.
    let rows = vec![(vec![1, 1], Cmp::Le, 3), (vec![1, 0], Cmp::Le, 2), (vec![0, 1], Cmp::Le, 2)];
    assert_eq!(vertex_optimum(&[-1, -1], &rows), Some(q(-3)));
    let infeasible = vec![(vec![1], Cmp::Ge, 3), (vec![1], Cmp::Le, 2)];
    assert_eq!(vertex_optimum(&[1], &infeasible), None);
}
