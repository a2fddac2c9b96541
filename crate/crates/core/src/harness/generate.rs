use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::autoencoder::{AnchorSetInstance, AnchorSetTruth};
use crate::boolean::{write_bool, Monomial, PlantedBooleanInstance, TargetSet, VarSet};
use crate::error::{Error, Result};
use crate::geometry::{angle_vector_to_subspace, OrthonormalBasis, UnitVector};
use crate::harness::config::{Scenario, ScenarioConfig};
use crate::lifelong_linear::{gamma_effective_dimension_lower_bound, LinearTask};
use crate::polynomial::MultilinearPolynomial;
use crate::sampling::{derive_seed, rng_from, Distribution, SeededRng};

pub(crate) const TAG_GEN: u64 = 1;
pub(crate) const TAG_TASK: u64 = 2;
pub(crate) const TAG_EVAL: u64 = 3;
pub(crate) const TAG_ALGO: u64 = 4;

/// Probability that a non-anchor variable joins a planted metafeature.
const SHARED_VAR_P: f64 = 0.3;
const TARGET_RETRIES: usize = 1000;
const INSTANCE_RETRIES: usize = 200;

#[derive(Debug, Clone)]
pub struct LinearInstance {
    pub n: usize,
    pub frame: OrthonormalBasis,
    /// τ-dimensional subspaces of the frame; empty for a single level.
    pub subframes: Vec<OrthonormalBasis>,
    pub assignment: Vec<Option<usize>>,
    pub targets: Vec<UnitVector>,
    /// Planted angle of each target off its subspace.
    pub perturbation: Vec<f64>,
}

impl LinearInstance {
    pub fn tasks(&self, trial_seed: u64) -> Vec<LinearTask> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, t)| LinearTask {
                dist: Distribution::gaussian(self.n),
                target: t.clone(),
                seed: derive_seed(trial_seed, &[TAG_TASK, i as u64]),
            })
            .collect()
    }

    /// Each target within `max_angle` of the frame (and of its subframe),
    /// measured independently of the planting.
    pub fn assumption_violations(&self, max_angle: f64) -> Vec<String> {
        let mut v = Vec::new();
        for (i, t) in self.targets.iter().enumerate() {
            let d = angle_vector_to_subspace(t, &self.frame).unwrap_or(f64::NAN);
            if !(d <= max_angle + 1e-9) {
                v.push(format!("target {} at angle {d} from the shared subspace", i + 1));
            }
            if let Some(Some(s)) = self.assignment.get(i) {
                let d = angle_vector_to_subspace(t, &self.subframes[*s]).unwrap_or(f64::NAN);
                if !(d <= max_angle + 1e-9) {
                    v.push(format!("target {} at angle {d} from its subspace", i + 1));
                }
            }
        }
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for t in &self.targets {
            s.push_str(&t.coords().iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct PolyInstance {
    pub n: usize,
    pub b: f64,
    pub t: usize,
    pub layer: PlantedBooleanInstance,
    pub targets: Vec<MultilinearPolynomial>,
}

impl PolyInstance {
    pub fn assumption_violations(&self) -> Vec<String> {
        let mut v = self.layer.assumption_violations();
        for (i, p) in self.targets.iter().enumerate() {
            if p.l1_norm() > self.b * (1.0 + 1e-12) {
                v.push(format!("target {} has L1 norm {} > B", i + 1, p.l1_norm()));
            }
            if p.len() > self.t {
                v.push(format!("target {} has {} > t terms", i + 1, p.len()));
            }
        }
        v
    }
}

#[derive(Debug, Clone)]
pub enum PlantedInstance {
    Linear(LinearInstance),
    Boolean(PlantedBooleanInstance),
    AnchorSet(AnchorSetInstance),
    Polynomial(PolyInstance),
}

impl PlantedInstance {
    /// Violations of the scenario's assumption found by the independent checkers.
    pub fn assumption_violations(&self, cfg: &ScenarioConfig) -> Vec<String> {
        match self {
            PlantedInstance::Linear(l) => {
                let mut v = l.assumption_violations(cfg.beta);
                let budget = if cfg.scenario == Scenario::TwoLevel { cfg.two_level_budget() } else { cfg.one_level_budget() };
                match budget.and_then(|b| gamma_effective_dimension_lower_bound(&l.targets, b.gamma)) {
                    Ok(d) if d > cfg.k => v.push(format!("γ-separated subsequence of length {d} > k")),
                    Ok(_) => {}
                    Err(e) => v.push(format!("γ-effective dimension not computable: {e}")),
                }
                v
            }
            PlantedInstance::Boolean(b) => b.assumption_violations(),
            PlantedInstance::AnchorSet(a) => a.anchor_set_violations(),
            PlantedInstance::Polynomial(p) => p.assumption_violations(),
        }
    }

    /// Files describing the instance: `(name, contents)` pairs.
    pub fn files(&self) -> Vec<(String, String)> {
        match self {
            PlantedInstance::Linear(l) => {
                let mut f = vec![("targets.csv".to_string(), l.to_csv())];
                let frame: Vec<String> = l
                    .frame
                    .vectors()
                    .iter()
                    .map(|v| v.coords().iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(","))
                    .collect();
                f.push(("frame.csv".into(), frame.join("\n") + "\n"));
                f
            }
            PlantedInstance::Boolean(b) => vec![
                ("targets.bool".into(), write_bool(b.n, b.targets.targets())),
                ("metafeatures.bool".into(), write_bool(b.n, &b.metafeatures)),
            ],
            PlantedInstance::AnchorSet(a) => {
                let mut f = vec![("targets.bool".to_string(), write_bool(a.ts.n(), a.ts.targets()))];
                if let Some(t) = &a.truth {
                    f.push(("metafeatures.bool".into(), write_bool(a.ts.n(), &t.metafeatures)));
                    f.push(("anchors.bool".into(), write_bool(a.ts.n(), &t.anchors)));
                }
                f
            }
            PlantedInstance::Polynomial(p) => {
                let mut f = vec![("metafeatures.bool".to_string(), write_bool(p.n, &p.layer.metafeatures))];
                for (i, t) in p.targets.iter().enumerate() {
                    f.push((format!("target_{:03}.poly", i + 1), t.to_text()));
                }
                f
            }
        }
    }
}

fn random_in_span<R: Rng + ?Sized>(rng: &mut R, basis: &OrthonormalBasis) -> UnitVector {
    loop {
        let c = UnitVector::random(rng, basis.rank());
        if let Ok(u) = UnitVector::new(basis.lift(c.coords())) {
            return u;
        }
    }
}

fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Result<OrthonormalBasis> {
    let mut b = OrthonormalBasis::empty(n);
    while b.rank() < k {
        b.push(UnitVector::random(rng, n).coords())?;
    }
    Ok(b)
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, t: UnitVector, frame: &OrthonormalBasis, beta: f64) -> (UnitVector, f64) {
    if beta <= 0.0 || frame.rank() == frame.dim() {
        return (t, 0.0);
    }
    let angle = beta * rng.random::<f64>();
    loop {
        let g = UnitVector::random(rng, frame.dim());
        if let Ok(off) = UnitVector::new(frame.residual(g.coords())) {
            return (t.rotate_towards(&off, angle), angle);
        }
    }
}

pub fn planted_subspace<R: Rng + ?Sized>(rng: &mut R, cfg: &ScenarioConfig) -> Result<LinearInstance> {
    let frame = random_frame(rng, cfg.n, cfg.k)?;
    let two = cfg.scenario == Scenario::TwoLevel;
    let subframes: Vec<OrthonormalBasis> = if two {
        (0..cfg.r)
            .map(|_| {
                let mut s = OrthonormalBasis::empty(cfg.n);
                while s.rank() < cfg.tau {
                    s.push(random_in_span(rng, &frame).coords())?;
                }
                Ok(s)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut targets = Vec::with_capacity(cfg.m);
    let mut assignment = Vec::with_capacity(cfg.m);
    let mut perturbation = Vec::with_capacity(cfg.m);
    for _ in 0..cfg.m {
        let base = if two {
            let s = rng.random_range(0..cfg.r);
            assignment.push(Some(s));
            random_in_span(rng, &subframes[s])
        } else {
            assignment.push(None);
            random_in_span(rng, &frame)
        };
        let (t, a) = perturb(rng, base, &frame, cfg.beta);
        targets.push(t);
        perturbation.push(a);
    }
    Ok(LinearInstance { n: cfg.n, frame, subframes, assignment, targets, perturbation })
}

/// `k` metafeatures, each owning one private anchor variable and sharing the
/// other variables at random; targets are random nonempty unions.
pub fn planted_anchored<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, m: usize, violate: bool) -> Result<PlantedBooleanInstance> {
    let anchors: Vec<usize> = sample_indices(rng, n, k).into_vec();
    let mut metafeatures: Vec<Monomial> = anchors
        .iter()
        .map(|&a| {
            let mut v = VarSet::empty(n);
            v.insert(a);
            for i in (0..n).filter(|i| !anchors.contains(i)) {
                if rng.random_bool(SHARED_VAR_P) {
                    v.insert(i);
                }
            }
            v
        })
        .collect();
    if violate {
        metafeatures[1].insert(anchors[0]);
    }
    let mut targets = TargetSet::new(n);
    let mut relevant = Vec::with_capacity(m);
    for _ in 0..m {
        let rel = loop {
            let r: Vec<usize> = (0..k).filter(|_| rng.random_bool(0.5)).collect();
            if !r.is_empty() {
                break r;
            }
        };
        let mut t = VarSet::empty(n);
        rel.iter().for_each(|&j| t.union_with(&metafeatures[j]));
        targets.push(t)?;
        relevant.push(rel);
    }
    Ok(PlantedBooleanInstance { n, metafeatures, anchors, targets, relevant })
}

/// Rejection-samples metafeatures with weight-`c` anchor sets and targets of
/// at most `k` metafeatures such that no foreign anchor set lands in a target.
pub fn planted_anchor_set<R: Rng + ?Sized>(rng: &mut R, cfg: &ScenarioConfig) -> Result<AnchorSetInstance> {
    let (n, c, k, mcount) = (cfg.n, cfg.c, cfg.k, cfg.metafeatures);
    let mut last = String::new();
    for _ in 0..INSTANCE_RETRIES {
        let metafeatures: Vec<Monomial> = (0..mcount)
            .map(|_| {
                let size = rng.random_range(c + 1..=(c + 3).min(n));
                VarSet::from_indices(n, sample_indices(rng, n, size)).expect("indices < n")
            })
            .collect();
        let anchors: Vec<VarSet> = metafeatures
            .iter()
            .map(|m| {
                let vars: Vec<usize> = m.iter().collect();
                VarSet::from_indices(n, sample_indices(rng, vars.len(), c).into_iter().map(|i| vars[i])).expect("indices < n")
            })
            .collect();
        if cfg.plant_violation && mcount >= 2 {
            // Metafeature 2 absorbs metafeature 1's anchor set, so any target
            // using metafeature 2 also exhibits it.
            let mut m1 = metafeatures.clone();
            m1[1].union_with(&anchors[0]);
            return finish_anchor_set(rng, cfg, m1, anchors, true);
        }
        match finish_anchor_set(rng, cfg, metafeatures, anchors, false) {
            Ok(inst) => return Ok(inst),
            Err(Error::AssumptionViolated(msg)) => last = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BudgetExceeded {
        what: format!("anchor-set rejection sampling (n={n}, |M|={mcount}, k={k}, c={c}; last rejection: {last})"),
        limit: INSTANCE_RETRIES as u64,
    })
}

fn finish_anchor_set<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    metafeatures: Vec<Monomial>,
    anchors: Vec<VarSet>,
    accept_any: bool,
) -> Result<AnchorSetInstance> {
    let (n, k, mcount) = (cfg.n, cfg.k, cfg.metafeatures);
    let mut ts = TargetSet::new(n);
    let mut relevant = Vec::with_capacity(cfg.m);
    for r in 0..cfg.m {
        let mut found = None;
        for _ in 0..TARGET_RETRIES {
            let size = rng.random_range(1..=k.min(mcount));
            let mut rel = sample_indices(rng, mcount, size).into_vec();
            rel.sort_unstable();
            let mut t = VarSet::empty(n);
            rel.iter().for_each(|&j| t.union_with(&metafeatures[j]));
            if accept_any || (0..mcount).all(|j| rel.contains(&j) || !anchors[j].is_subset(&t)) {
                found = Some((t, rel));
                break;
            }
        }
        let (t, rel) = found.ok_or_else(|| Error::AssumptionViolated(format!("target {} rejected {TARGET_RETRIES} times", r + 1)))?;
        ts.push(t)?;
        relevant.push(rel);
    }
    Ok(AnchorSetInstance { ts, c: cfg.c, k, truth: Some(AnchorSetTruth { metafeatures, anchors, relevant }) })
}

/// Anchored metafeature layer; each target is `1..=t` products of random
/// metafeature subsets with coefficients rescaled to an L1 norm in `[B/2, B]`.
pub fn planted_polynomials<R: Rng + ?Sized>(rng: &mut R, cfg: &ScenarioConfig) -> Result<PolyInstance> {
    let layer = planted_anchored(rng, cfg.n, cfg.k, 0, false)?;
    let mut targets = Vec::with_capacity(cfg.m);
    for _ in 0..cfg.m {
        // At most 2^k − 1 distinct nonempty products exist.
        let distinct = if cfg.k >= 20 { usize::MAX } else { (1usize << cfg.k) - 1 };
        let want = rng.random_range(1..=cfg.t.min(distinct));
        let mut terms: Vec<(Monomial, f64)> = Vec::new();
        while terms.len() < want {
            let mut mono = VarSet::empty(cfg.n);
            for mf in &layer.metafeatures {
                if rng.random_bool(0.5) {
                    mono.union_with(mf);
                }
            }
            if !mono.is_empty() && !terms.iter().any(|(t, _)| t == &mono) {
                let mag = rng.random_range(0.5..1.0);
                terms.push((mono, if rng.random_bool(0.5) { mag } else { -mag }));
            }
        }
        let l1: f64 = terms.iter().map(|(_, c)| c.abs()).sum();
        let scale = cfg.b * rng.random_range(0.5..=1.0) / l1;
        terms.iter_mut().for_each(|(_, c)| *c *= scale);
        targets.push(MultilinearPolynomial::from_terms(cfg.n, terms)?);
    }
    Ok(PolyInstance { n: cfg.n, b: cfg.b, t: cfg.t, layer, targets })
}

pub fn trial_rng(trial_seed: u64) -> SeededRng {
    rng_from(derive_seed(trial_seed, &[TAG_GEN]))
}

/// The planted instance and hidden truth for one trial.
pub fn generate_instance(cfg: &ScenarioConfig, trial_seed: u64) -> Result<PlantedInstance> {
    cfg.validate()?;
    let mut rng = trial_rng(trial_seed);
    Ok(match cfg.scenario {
        Scenario::SharedSubspace | Scenario::TwoLevel => PlantedInstance::Linear(planted_subspace(&mut rng, cfg)?),
        Scenario::AnchoredConjunctions => {
            PlantedInstance::Boolean(planted_anchored(&mut rng, cfg.n, cfg.k, cfg.m, cfg.plant_violation)?)
        }
        Scenario::AnchorSet => PlantedInstance::AnchorSet(planted_anchor_set(&mut rng, cfg)?),
        Scenario::Polynomials => PlantedInstance::Polynomial(planted_polynomials(&mut rng, cfg)?),
    })
}
