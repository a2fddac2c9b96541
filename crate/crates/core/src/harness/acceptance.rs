//! Criteria 1–12 at their stated scales and tolerances. Each criterion is
//! self-contained and seeded from a fixed constant.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand::Rng;

use crate::boolean::{brute_force_set_basis, online_session, solve_consistency, VarSet};
use crate::error::Result;
use crate::geometry::{
    angle_between_vectors, angle_subspace_to_subspace, angle_vector_to_subspace, check_vector_perturbation_bound, check_subspace_perturbation_bound,
    orthogonal_planes_example, OrthonormalBasis, UnitVector,
};
use crate::harness::config::{Scenario, ScenarioConfig};
use crate::harness::generate::planted_anchored;
use crate::harness::run::{run_experiment, run_trial, RunReport, Verdict};
use crate::lifelong_linear::{run_one_level, run_two_level, LinearConfig, LinearRepState};
use crate::polynomial::{mq_interpolate, run_polynomial_lifelong, MultilinearPolynomial, PolyLearnConfig, PolyRepState, PolyTask};
use crate::sampling::{derive_seed, estimate_error, rng_from, Distribution, MqOracle, Predictor};

const SUITE_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub secs: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {:<28} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.secs,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "disagreement_equals_angle"),
    (2, "one_vector_perturbation"),
    (3, "subspace_perturbation"),
    (4, "one_level_streams"),
    (5, "two_level_streams"),
    (6, "anchored_consistency"),
    (7, "online_scratch_bound"),
    (8, "product_transfer"),
    (9, "sparse_autoencoder"),
    (10, "eq_session_envelopes"),
    (11, "polynomials"),
    (12, "determinism_round_trip"),
];

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u8) -> CriterionOutcome {
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    let start = Instant::now();
    let res = match id {
        1 => criterion1(),
        2 => criterion2(),
        3 => criterion3(),
        4 => criterion4(),
        5 => criterion5(),
        6 => criterion6(),
        7 => criterion7(),
        8 => criterion8(),
        9 => criterion9(),
        10 => criterion10(),
        11 => criterion11(),
        12 => criterion12(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let secs = start.elapsed().as_secs_f64();
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome { id, name, passed, detail, secs }
}

fn seed(id: u64) -> u64 {
    derive_seed(SUITE_SEED, &[id])
}

fn check_secs(start: Instant, limit: f64) -> (bool, f64) {
    let s = start.elapsed().as_secs_f64();
    (s < limit, s)
}

fn failed_checks(r: &RunReport, names: &[&str]) -> Vec<String> {
    r.checks
        .iter()
        .filter(|c| names.contains(&c.name.as_str()) && c.verdict != Verdict::Pass)
        .map(|c| format!("{}={} (measured {}, bound {})", c.name, c.verdict, c.measured, c.bound))
        .collect()
}

fn counter_max(r: &RunReport, key: &str) -> f64 {
    r.trials.iter().filter_map(|t| t.counters.get(key)).copied().fold(f64::NEG_INFINITY, f64::max)
}

fn counter_sum(r: &RunReport, key: &str) -> f64 {
    r.trials.iter().filter_map(|t| t.counters.get(key)).sum()
}

fn criterion1() -> Result<(bool, String)> {
    let start = Instant::now();
    let mut rng = rng_from(seed(1));
    let mut failures = 0;
    let mut max_z = 0.0f64;
    for d in [2usize, 10] {
        let dist = Distribution::gaussian(d);
        for i in 0..100u64 {
            let u = UnitVector::random(&mut rng, d);
            let v = UnitVector::random(&mut rng, d);
            let p = angle_between_vectors(&u, &v)? / PI;
            let e = estimate_error(
                &Predictor::Halfspace(u.coords()),
                &Predictor::Halfspace(v.coords()),
                &dist,
                100_000,
                derive_seed(seed(1), &[d as u64, i]),
            )?;
            let z = (e.estimate - p).abs() / e.std_error_at(p);
            max_z = max_z.max(z);
            failures += (z > 3.0) as usize;
        }
    }
    let (fast, secs) = check_secs(start, 30.0);
    Ok((failures == 0 && fast, format!("{failures}/200 pairs beyond 3 SE (max z {max_z:.2}); {secs:.1}s < 30s")))
}

fn random_frame<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<OrthonormalBasis> {
    let mut b = OrthonormalBasis::empty(n);
    while b.rank() < k {
        b.push(UnitVector::random(rng, n).coords())?;
    }
    Ok(b)
}

fn criterion2() -> Result<(bool, String)> {
    let mut rng = rng_from(seed(2));
    let (mut done, mut violations, mut worst) = (0, 0, 0.0f64);
    while done < 1000 {
        let n = rng.random_range(2..=10);
        let k = rng.random_range(1..=5.min(n - 1));
        let u = random_frame(&mut rng, n, k)?;
        let b = UnitVector::random(&mut rng, n);
        let angle = if rng.random_bool(0.5) { rng.random_range(0.0..0.3) } else { rng.random_range(0.0..FRAC_PI_2) };
        let bt = b.rotate_towards(&UnitVector::random(&mut rng, n), angle);
        let rep = check_vector_perturbation_bound(&u, &b, &bt)?;
        if !rep.preconditions_hold() || angle_vector_to_subspace(&b, &u)? < 1e-6 {
            continue;
        }
        done += 1;
        violations += !rep.holds as usize;
        if rep.bound > 0.0 {
            worst = worst.max(rep.measured / rep.bound);
        }
    }
    Ok((violations == 0, format!("{violations} violations in {done} instances (max measured/bound {worst:.3})")))
}

fn criterion3() -> Result<(bool, String)> {
    let mut rng = rng_from(seed(3));
    let (mut done, mut violations, mut worst) = (0, 0, 0.0f64);
    while done < 1000 {
        let k = rng.random_range(1..=6);
        let n = rng.random_range(k.max(2)..=10);
        let gamma = rng.random_range(0.05..0.8);
        let eps_acc = gamma * gamma / (10.0 * k as f64) * rng.random_range(0.05..=1.0);
        let mut learned = Vec::with_capacity(k);
        let mut span = OrthonormalBasis::empty(n);
        while learned.len() < k {
            let c = UnitVector::random(&mut rng, n);
            if !span.is_empty() && angle_vector_to_subspace(&c, &span)? < gamma {
                continue;
            }
            span.push(c.coords())?;
            learned.push(c);
        }
        let truth: Vec<UnitVector> = learned
            .iter()
            .map(|a| a.rotate_towards(&UnitVector::random(&mut rng, n), eps_acc * rng.random::<f64>()))
            .collect();
        let rep = check_subspace_perturbation_bound(&truth, &learned, gamma, eps_acc)?;
        if !rep.preconditions_hold() {
            continue;
        }
        done += 1;
        violations += !rep.holds as usize;
        worst = worst.max(rep.measured / rep.bound);
    }
    let (w1, w2, w1t, w2t) = orthogonal_planes_example();
    let per_vector = angle_between_vectors(&w1, &w1t)?.max(angle_between_vectors(&w2, &w2t)?);
    let planes = angle_subspace_to_subspace(
        &OrthonormalBasis::span_of(3, &[w1, w2])?,
        &OrthonormalBasis::span_of(3, &[w1t, w2t])?,
    )?;
    let fig = per_vector <= 0.11 && (planes - FRAC_PI_2).abs() <= 1e-6;
    Ok((
        violations == 0 && fig,
        format!(
            "{violations} violations in {done} instances (max measured/bound {worst:.3}); counterexample per-vector {per_vector:.4}, subspace {planes:.7}"
        ),
    ))
}

fn linear_cfg(scenario: Scenario, n: usize, k: usize, m: usize, seed: u64, trials: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig::defaults(scenario);
    c.n = n;
    c.k = k;
    c.m = m;
    c.eps = 0.1;
    c.delta = 0.05;
    c.seed = seed;
    c.trials = trials;
    c
}

fn criterion4() -> Result<(bool, String)> {
    let start = Instant::now();
    let mut c = linear_cfg(Scenario::SharedSubspace, 50, 5, 200, seed(4), 20);
    c.eps_acc = 1e-4;
    c.eval_samples = 10_000;
    let r = run_experiment(&c)?;
    let bad = failed_checks(&r, &["k_tilde_le_k", "scratch_le_k"]);
    let reused = counter_sum(&r, "reused_tasks");
    let within = counter_sum(&r, "reused_within_eps");
    let frac = within / reused;
    let (fast, secs) = check_secs(start, 300.0);
    Ok((
        bad.is_empty() && frac >= 0.95 && fast,
        format!(
            "max k̃ {}; max scratch {}; reused within eps {within}/{reused} = {frac:.4}; {secs:.1}s < 300s {}",
            counter_max(&r, "k_tilde"),
            counter_max(&r, "scratch_count"),
            bad.join("; ")
        ),
    ))
}

fn criterion5() -> Result<(bool, String)> {
    let mut c = linear_cfg(Scenario::TwoLevel, 60, 6, 200, seed(5), 10);
    c.r = 4;
    c.tau = 2;
    c.eps_acc_tilde = 2.5e-3;
    c.eps_acc = 3e-5;
    c.eval_samples = 0;
    let r = run_experiment(&c)?;
    let bad = failed_checks(&r, &["k_tilde_le_k", "r_tilde_le_tau_r"]);
    Ok((
        bad.is_empty(),
        format!("max k̃ {} (≤ 6), max r̃ {} (≤ 8) over 10 runs {}", counter_max(&r, "k_tilde"), counter_max(&r, "r_tilde"), bad.join("; ")),
    ))
}

fn criterion6() -> Result<(bool, String)> {
    let start = Instant::now();
    let mut rng = rng_from(seed(6));
    let (mut size_mismatch, mut recon, mut cond, mut assumption) = (0, 0, 0, 0);
    for _ in 0..200 {
        let n = rng.random_range(4..=12);
        let k = rng.random_range(1..=4);
        let m = rng.random_range(1..=10);
        let inst = planted_anchored(&mut rng, n, k, m, false)?;
        assumption += !inst.assumption_violations().is_empty() as usize;
        let d = solve_consistency(&inst.targets);
        let opt = brute_force_set_basis(&inst.targets, k)?;
        size_mismatch += (opt.map(|o| o.len()) != Some(d.len())) as usize;
        recon += !d.reconstructs(&inst.targets) as usize;
        cond += !inst.dictionary_violations(&d).is_empty() as usize;
    }
    let (fast, secs) = check_secs(start, 60.0);
    Ok((
        size_mismatch + recon + cond + assumption == 0 && fast,
        format!(
            "200 instances: {size_mismatch} size mismatches, {recon} reconstruction failures, {cond} condition violations, {assumption} bad plants; {secs:.1}s < 60s"
        ),
    ))
}

fn criterion7() -> Result<(bool, String)> {
    let (n, k, m) = (10, 3, 100);
    let (mut over, mut non_strict, mut max_scratch) = (0, 0, 0);
    for s in 0..50u64 {
        let mut rng = rng_from(derive_seed(seed(7), &[s]));
        let inst = planted_anchored(&mut rng, n, k, m, false)?;
        let tr = online_session(inst.targets.targets(), n, k)?;
        max_scratch = max_scratch.max(tr.scratch_count());
        over += (tr.scratch_count() > tr.scratch_bound()) as usize;
        non_strict += tr.non_decreasing_phi_events();
    }
    Ok((
        over == 0 && non_strict == 0,
        format!("max scratch {max_scratch} ≤ 103 ({over} over); {non_strict} scratch events without a strict potential change"),
    ))
}

fn criterion8() -> Result<(bool, String)> {
    let mut c = ScenarioConfig::defaults(Scenario::AnchoredConjunctions);
    c.n = 16;
    c.k = 4;
    c.m = 50;
    c.eps = 0.1;
    c.delta = 0.05;
    c.eval_samples = 10_000;
    c.seed = seed(8);
    c.trials = 10;
    let r = run_experiment(&c)?;
    let bad = failed_checks(&r, &["pac_error_le_eps"]);
    Ok((bad.is_empty(), format!("max hypothesis error {:.4} ≤ 0.1 over 10 runs {}", counter_max(&r, "pac_max_error"), bad.join("; "))))
}

fn criterion9() -> Result<(bool, String)> {
    let mut c = ScenarioConfig::defaults(Scenario::AnchorSet);
    c.n = 20;
    c.m = 30;
    c.metafeatures = 5;
    c.k = 3;
    c.c = 2;
    c.max_retries = 16;
    c.seed = seed(9);
    c.trials = 100;
    let r = run_experiment(&c)?;
    let names = [
        "lp_truth_feasible",
        "lp_truth_objective_le_M",
        "lp_optimum_le_M",
        "rounding_retries_le_max",
        "dictionary_size_le_bound",
        "sparsity_le_bound",
    ];
    let present = names.iter().all(|n| r.checks.iter().any(|c| c.name == *n));
    let bad = failed_checks(&r, &names);
    Ok((
        present && bad.is_empty(),
        format!(
            "100 runs: max LP optimum {:.3}, max retries {}, max |D| {} (≤ {:.1}), max sparsity {} (≤ {:.1}) {}",
            counter_max(&r, "lp_optimum"),
            counter_max(&r, "rounding_retries"),
            counter_max(&r, "dictionary_size"),
            crate::autoencoder::dictionary_size_bound(5, 20, 30),
            counter_max(&r, "max_target_sparsity"),
            crate::autoencoder::sparsity_bound(3, 20, 30),
            bad.join("; ")
        ),
    ))
}

fn criterion10() -> Result<(bool, String)> {
    let mut a = ScenarioConfig::defaults(Scenario::AnchoredConjunctions);
    a.n = 10;
    a.k = 3;
    a.m = 100;
    a.eval_samples = 0;
    a.seed = seed(10);
    a.trials = 50;
    let ra = run_experiment(&a)?;
    let mut b = ScenarioConfig::defaults(Scenario::AnchorSet);
    b.n = 12;
    b.m = 60;
    b.metafeatures = 4;
    b.k = 3;
    b.c = 2;
    b.seed = seed(100);
    b.trials = 50;
    let rb = run_experiment(&b)?;
    let mut bad = failed_checks(&ra, &["eq_dict_queries_le_envelope"]);
    bad.extend(failed_checks(&rb, &["anchor_eq_scratch_le_n_M", "winnow_mistakes_le_bound"]));
    Ok((
        bad.is_empty(),
        format!(
            "max EQ total {} ≤ {}; max scratch {} ≤ {}; max Winnow mistakes {} ≤ {} {}",
            counter_max(&ra, "eq_dict_total_queries"),
            100 * 4 + (100 + 3) * 11,
            counter_max(&rb, "anchor_eq_scratch_count"),
            12 * 4,
            counter_max(&rb, "anchor_eq_max_mistakes"),
            counter_max(&rb, "anchor_eq_mistake_bound"),
            bad.join("; ")
        ),
    ))
}

fn random_polynomial<R: Rng>(rng: &mut R, n: usize, t: usize) -> Result<MultilinearPolynomial> {
    let mut terms: Vec<(VarSet, f64)> = Vec::with_capacity(t);
    while terms.len() < t {
        let deg = rng.random_range(0..=n.min(6));
        let mono = VarSet::from_indices(n, rand::seq::index::sample(rng, n, deg))?;
        if terms.iter().all(|(m, _)| m != &mono) {
            let c = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            terms.push((mono, c));
        }
        if terms.len() == 1 << n {
            break;
        }
    }
    MultilinearPolynomial::from_terms(n, terms)
}

fn criterion11() -> Result<(bool, String)> {
    let mut rng = rng_from(seed(11));
    let (mut wrong, mut max_diff) = (0, 0.0f64);
    for _ in 0..500 {
        let n = rng.random_range(1..=30);
        let t = rng.random_range(1..=20);
        let p = random_polynomial(&mut rng, n, t)?;
        let mut mq = MqOracle::new(p.clone());
        let mut eq = mq.eq_oracle();
        let got = mq_interpolate(&mut mq, Some(&mut eq), t)?.polynomial;
        let same_support = got.terms().keys().eq(p.terms().keys());
        let mut diff = 0.0f64;
        for _ in 0..1000 {
            let x = Distribution::uniform_cube(n).draw_bits(&mut rng);
            diff = diff.max((got.eval(&x) - p.eval(&x)).abs());
        }
        max_diff = max_diff.max(diff);
        wrong += (!same_support || !got.approx_eq(&p, 1e-9) || diff > 1e-9) as usize;
    }
    let mut c = ScenarioConfig::defaults(Scenario::Polynomials);
    c.n = 12;
    c.k = 4;
    c.m = 30;
    c.b = 10.0;
    c.t = 4;
    c.seed = seed(110);
    c.trials = 10;
    let r = run_experiment(&c)?;
    let bad = failed_checks(&r, &["m_tilde_le_k", "scratch_le_n2_plus_k", "reused_mse_le_eps_mse"]);
    Ok((
        wrong == 0 && bad.is_empty(),
        format!(
            "{wrong}/500 interpolation mismatches (max point diff {max_diff:.1e}); streams: max |M̃| {}, max scratch {}, max reused MSE {:.3} ≤ {} {}",
            counter_max(&r, "max_dictionary_size"),
            counter_max(&r, "scratch_count"),
            counter_max(&r, "max_reused_mse"),
            0.01 * c.b * c.b,
            bad.join("; ")
        ),
    ))
}

fn linear_round_trip(st: &LinearRepState, n: usize, probe_seed: u64) -> Result<bool> {
    let back = LinearRepState::parse(&st.to_text())?;
    let (pa, pb) = (st.predictors(), back.predictors());
    let mut rng = rng_from(probe_seed);
    let dist = Distribution::gaussian(n);
    let mut x = vec![0.0; n];
    for _ in 0..1000 {
        dist.fill_real(&mut rng, &mut x);
        for task in 0..pa.len() {
            if st.predict(&pa, task, &x) != back.predict(&pb, task, &x) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn poly_round_trip(st: &PolyRepState, n: usize, probe_seed: u64) -> Result<bool> {
    let back = PolyRepState::parse(&st.to_text())?;
    let mut rng = rng_from(probe_seed);
    let dist = Distribution::uniform_cube(n);
    for _ in 0..1000 {
        let x = dist.draw_bits(&mut rng);
        for task in 0..st.hypotheses.len() {
            if st.predict(task, &x).to_bits() != back.predict(task, &x).to_bits() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn criterion12() -> Result<(bool, String)> {
    let mut nondeterministic = Vec::new();
    for s in Scenario::ALL {
        let mut c = ScenarioConfig::defaults(s);
        c.seed = seed(12);
        c.trials = 2;
        c.m = 10;
        if run_experiment(&c)?.body() != run_experiment(&c)?.body() {
            nondeterministic.push(s.as_str());
        }
        if run_trial(&c, 1)?.rows != run_experiment(&c)?.trials[1].rows {
            nondeterministic.push(s.as_str());
        }
    }
    let mut broken = Vec::new();
    for (two, name) in [(false, "one-level"), (true, "two-level")] {
        let scen = if two { Scenario::TwoLevel } else { Scenario::SharedSubspace };
        let c = linear_cfg(scen, 12, 4, 12, seed(120), 1);
        let crate::harness::PlantedInstance::Linear(l) = crate::harness::generate_instance(&c, seed(121))? else {
            unreachable!("linear scenario")
        };
        let budget = if two { c.two_level_budget()? } else { c.one_level_budget()? };
        let lc = LinearConfig::new(budget);
        let (st, _) = if two { run_two_level(l.tasks(1), 12, &lc)? } else { run_one_level(l.tasks(1), 12, &lc)? };
        if !linear_round_trip(&st, 12, seed(122))? {
            broken.push(name);
        }
    }
    let mut c = ScenarioConfig::defaults(Scenario::Polynomials);
    c.m = 10;
    let crate::harness::PlantedInstance::Polynomial(p) = crate::harness::generate_instance(&c, seed(123))? else {
        unreachable!("polynomial scenario")
    };
    let tasks: Vec<PolyTask> =
        p.targets.iter().enumerate().map(|(i, t)| PolyTask { target: t.clone(), seed: i as u64 }).collect();
    let (st, _) = run_polynomial_lifelong(&tasks, &Distribution::uniform_cube(c.n), &PolyLearnConfig::new(c.b, c.t))?;
    if !poly_round_trip(&st, c.n, seed(124))? {
        broken.push("polynomial");
    }
    Ok((
        nondeterministic.is_empty() && broken.is_empty(),
        format!(
            "non-deterministic scenarios: [{}]; round-trip mismatches: [{}]",
            nondeterministic.join(","),
            broken.join(",")
        ),
    ))
}
