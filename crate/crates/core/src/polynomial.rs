//! Multilinear polynomials over `{0,1}^n`: exact recovery from membership
//! queries, L1-bounded regression over products of metafeatures, and the
//! lifelong drivers that grow and re-compact a monomial dictionary.

use std::collections::{BTreeMap, HashMap};

use crate::boolean::{implication_edges, solve_consistency, Dictionary, Monomial, TargetSet, VarSet};
use crate::error::{Error, Result};
use crate::sampling::{rng_from, Distribution, MqOracle, PolyEqAnswer, PolynomialEqOracle, SeededRng};

/// Coefficients at or below this magnitude count as zero.
pub const ZERO_TOL: f64 = 1e-9;
pub const MAX_K_EFF: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearPolynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl MultilinearPolynomial {
    pub fn zero(n: usize) -> Self {
        MultilinearPolynomial { n, terms: BTreeMap::new() }
    }

    /// Sums repeated monomials and drops exact zeros.
    pub fn from_terms(n: usize, terms: Vec<(Monomial, f64)>) -> Result<Self> {
        let mut p = MultilinearPolynomial::zero(n);
        for (m, c) in terms {
            if m.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.n() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
            p.add_term(m, c);
        }
        p.terms.retain(|_, c| *c != 0.0);
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// `Σ_{S ⊆ x} c_S`.
    pub fn eval(&self, x: &VarSet) -> f64 {
        self.terms.iter().filter(|(s, _)| s.is_subset(x)).map(|(_, c)| c).sum()
    }

    /// `self − other` with coefficients below [`ZERO_TOL`] dropped.
    pub fn sub(&self, other: &MultilinearPolynomial) -> MultilinearPolynomial {
        let mut d = self.clone();
        for (m, c) in &other.terms {
            d.add_term(m.clone(), -c);
        }
        d.terms.retain(|_, c| c.abs() > ZERO_TOL);
        d
    }

    /// Same support and coefficients within `tol`.
    pub fn approx_eq(&self, other: &MultilinearPolynomial, tol: f64) -> bool {
        self.n == other.n
            && self.terms.len() == other.terms.len()
            && self.terms.iter().all(|(m, c)| other.terms.get(m).is_some_and(|d| (c - d).abs() <= tol))
    }

    /// `E[(self − other)²]` under a product distribution with marginals `p`:
    /// `Σ_{S,T} d_S d_T Π_{i ∈ S∪T} p_i`.
    pub fn mean_squared_distance(&self, other: &MultilinearPolynomial, p: &[f64]) -> f64 {
        let d: Vec<(Monomial, f64)> = self.sub(other).terms.into_iter().collect();
        let mass = |s: &VarSet| s.iter().map(|i| p[i]).product::<f64>();
        let mut total = 0.0;
        for (a, ca) in &d {
            for (b, cb) in &d {
                total += ca * cb * mass(&a.union(b));
            }
        }
        total.max(0.0)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("POLY v1 n={}\n", self.n);
        for (m, c) in &self.terms {
            s.push_str(&format!("{} ; {}\n", fmt_f64(*c), m.to_index_list()));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hi, header) = lines.next().ok_or_else(|| Error::parse(1, "missing POLY v1 header"))?;
        let n = crate::boolean::parse_header(header, "POLY", &["n"]).map_err(|m| Error::parse(hi + 1, m))?[0];
        let mut terms = Vec::new();
        for (i, l) in lines {
            let (c, idx) = l.split_once(';').ok_or_else(|| Error::parse(i + 1, "expected `<coefficient> ; <indices>`"))?;
            let c: f64 = c.trim().parse().map_err(|_| Error::parse(i + 1, format!("bad coefficient {:?}", c.trim())))?;
            let m = VarSet::parse_index_list(n, idx).map_err(|e| Error::parse(i + 1, e))?;
            terms.push((m, c));
        }
        MultilinearPolynomial::from_terms(n, terms)
    }
}

/// 17 significant digits; parses back to the same bits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `Σ_{T ⊆ S} (−1)^{|S∖T|} g(T)`.
pub fn mobius_coefficient(s: &VarSet, mut g: impl FnMut(&VarSet) -> f64) -> f64 {
    let idx: Vec<usize> = s.iter().collect();
    assert!(idx.len() <= 24, "Möbius sum over 2^{} subsets", idx.len());
    let mut total = 0.0;
    for mask in 0u32..(1 << idx.len()) {
        let t = VarSet::from_indices(s.n(), (0..idx.len()).filter(|b| mask >> b & 1 == 1).map(|b| idx[b])).unwrap();
        let sign = if (idx.len() - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * g(&t);
    }
    total
}

#[derive(Debug, Clone)]
pub struct Interpolation {
    pub polynomial: MultilinearPolynomial,
    pub mq_queries: u64,
    pub eq_queries: u64,
}

/// Recovers a sparse multilinear polynomial from membership queries.
///
/// Starting from the full set, a descent drops each variable whose removal
/// keeps the residual `g(U) − Σ_{found S ⊆ U} c_S` nonzero; it ends at a set
/// whose only unfound subterm is itself, whose coefficient is the residual.
/// An equivalence query (if given) then certifies the result, and since its
/// counterexamples are smallest differing terms, each one repairs exactly one
/// coefficient in the rare case that cancellation misled the descent.
pub fn mq_interpolate(mq: &mut MqOracle, eq: Option<&mut PolynomialEqOracle>, t_max: usize) -> Result<Interpolation> {
    let n = mq.n();
    let start_mq = mq.query_count();
    let mut cache: HashMap<VarSet, f64> = HashMap::new();
    let mut found: BTreeMap<Monomial, f64> = BTreeMap::new();
    let mut g = |mq: &mut MqOracle, s: &VarSet| *cache.entry(s.clone()).or_insert_with(|| mq.query(s));
    let residual = |found: &BTreeMap<Monomial, f64>, gv: f64, s: &VarSet| {
        gv - found.iter().filter(|(t, _)| t.is_subset(s)).map(|(_, c)| c).sum::<f64>()
    };
    let too_dense = |t_max: usize| Error::BudgetExceeded { what: "interpolated term count".into(), limit: t_max as u64 };

    let empty = VarSet::empty(n);
    let c0 = g(mq, &empty);
    if c0.abs() > ZERO_TOL {
        found.insert(empty, c0);
    }
    let full = VarSet::full(n);
    for _ in 0..4 * t_max + 4 {
        let mut r = residual(&found, g(mq, &full), &full);
        if r.abs() <= ZERO_TOL {
            break;
        }
        let mut u = full.clone();
        for i in full.iter() {
            let mut v = u.clone();
            v.remove(i);
            let rv = residual(&found, g(mq, &v), &v);
            if rv.abs() > ZERO_TOL {
                u = v;
                r = rv;
            }
        }
        bump(&mut found, u, r);
        if found.len() > t_max {
            return Err(too_dense(t_max));
        }
    }

    let mut eq_queries = 0;
    if let Some(eq) = eq {
        let start_eq = eq.query_count();
        loop {
            let h = MultilinearPolynomial { n, terms: found.clone() };
            match eq.query(&h)? {
                PolyEqAnswer::Equivalent => break,
                PolyEqAnswer::Counterexample { x, value } => {
                    let r = residual(&found, value, &x);
                    bump(&mut found, x, r);
                }
            }
            if found.len() > t_max || eq.query_count() - start_eq > 2 * t_max as u64 + 2 {
                return Err(too_dense(t_max));
            }
        }
        eq_queries = eq.query_count() - start_eq;
    }
    Ok(Interpolation {
        polynomial: MultilinearPolynomial { n, terms: found },
        mq_queries: mq.query_count() - start_mq,
        eq_queries,
    })
}

fn bump(found: &mut BTreeMap<Monomial, f64>, s: Monomial, delta: f64) {
    let c = found.entry(s.clone()).or_insert(0.0);
    *c += delta;
    if c.abs() <= ZERO_TOL {
        found.remove(&s);
    }
}

/// Labeled real-valued examples `(x, f(x))` for a hidden polynomial.
pub struct PolyExampleOracle {
    dist: Distribution,
    target: MultilinearPolynomial,
    rng: SeededRng,
    draws: u64,
}

impl PolyExampleOracle {
    pub fn new(dist: Distribution, target: MultilinearPolynomial, seed: u64) -> Result<Self> {
        if dist.is_rotationally_symmetric() || dist.dim() != target.n() {
            return Err(Error::InvalidArgument("polynomial examples need a product distribution of matching dimension".into()));
        }
        Ok(PolyExampleOracle { dist, target, rng: rng_from(seed), draws: 0 })
    }

    pub fn draw(&mut self) -> (VarSet, f64) {
        let x = self.dist.draw_bits(&mut self.rng);
        self.draws += 1;
        let y = self.target.eval(&x);
        (x, y)
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// `ceil(8·B²·k_eff·ln 2 / eps_mse²)`.
pub fn regression_sample_size(b: f64, k_eff: usize, eps_mse: f64) -> usize {
    (8.0 * b * b * k_eff as f64 * std::f64::consts::LN_2 / (eps_mse * eps_mse)).ceil() as usize
}

#[derive(Debug, Clone)]
pub enum RegressionOutcome {
    Fit { coefficients: Vec<f64>, holdout_mse: f64, samples: u64 },
    NoGoodFit { holdout_mse: f64, samples: u64 },
}

impl RegressionOutcome {
    pub fn samples(&self) -> u64 {
        match self {
            RegressionOutcome::Fit { samples, .. } | RegressionOutcome::NoGoodFit { samples, .. } => *samples,
        }
    }

    pub fn holdout_mse(&self) -> f64 {
        match self {
            RegressionOutcome::Fit { holdout_mse, .. } | RegressionOutcome::NoGoodFit { holdout_mse, .. } => *holdout_mse,
        }
    }
}

const EG_EPOCHS: usize = 60;

/// Exponentiated-gradient regression over `±B` times the monomial features,
/// with weights on the simplex over the signed expansion. Runs several passes
/// over the sample and returns the average of the final pass's iterates;
/// success iff the mean squared error on a fresh holdout of equal size is at
/// most `eps_mse`.
pub fn l1_regress(features: &[Monomial], oracle: &mut PolyExampleOracle, b: f64, k_eff: usize, eps_mse: f64) -> Result<RegressionOutcome> {
    if k_eff > MAX_K_EFF || features.len() > 1usize << k_eff.min(63) {
        return Err(Error::BudgetExceeded { what: format!("{} regression features", features.len()), limit: 1 << MAX_K_EFF });
    }
    if !(b > 0.0 && eps_mse > 0.0) {
        return Err(Error::InvalidArgument("B and eps_mse must be positive".into()));
    }
    let start = oracle.draws();
    let count = regression_sample_size(b, k_eff.max(1), eps_mse);
    let f = features.len();
    let mut rows: Vec<(Vec<u32>, f64)> = Vec::with_capacity(count);
    for _ in 0..count {
        let (x, y) = oracle.draw();
        let active = (0..f as u32).filter(|&j| features[j as usize].is_subset(&x)).collect();
        rows.push((active, y));
    }
    let coefficients = if f == 0 { Vec::new() } else { exponentiated_gradient(&rows, f, b) };
    let mut sse = 0.0;
    for _ in 0..count {
        let (x, y) = oracle.draw();
        let pred: f64 = (0..f).filter(|&j| features[j].is_subset(&x)).map(|j| coefficients[j]).sum();
        sse += (pred - y) * (pred - y);
    }
    let holdout_mse = sse / count as f64;
    let samples = oracle.draws() - start;
    Ok(if holdout_mse <= eps_mse {
        RegressionOutcome::Fit { coefficients, holdout_mse, samples }
    } else {
        RegressionOutcome::NoGoodFit { holdout_mse, samples }
    })
}

fn exponentiated_gradient(rows: &[(Vec<u32>, f64)], f: usize, b: f64) -> Vec<f64> {
    // u[j] for +feature j, u[f + j] for −feature j
    let mut u = vec![1.0 / (2 * f) as f64; 2 * f];
    let eta = 1.0 / (4.0 * b * b);
    let mut avg = vec![0.0; 2 * f];
    for epoch in 0..EG_EPOCHS {
        for (active, y) in rows {
            let pred: f64 = b * active.iter().map(|&j| u[j as usize] - u[f + j as usize]).sum::<f64>();
            let g = 2.0 * (pred - y) * b;
            if g != 0.0 {
                let up = (-eta * g).exp();
                let down = 1.0 / up;
                for &j in active {
                    u[j as usize] *= up;
                    u[f + j as usize] *= down;
                }
                let z: f64 = u.iter().sum();
                u.iter_mut().for_each(|w| *w /= z);
            }
            if epoch + 1 == EG_EPOCHS {
                for (a, w) in avg.iter_mut().zip(&u) {
                    *a += w;
                }
            }
        }
    }
    let scale = b / rows.len().max(1) as f64;
    (0..f).map(|j| scale * (avg[j] - avg[f + j])).collect()
}

/// All distinct unions of subsets of `m`, the empty product included.
pub fn conjunction_closure(m: &[Monomial], n: usize) -> Result<Vec<Monomial>> {
    if m.len() > MAX_K_EFF {
        return Err(Error::BudgetExceeded { what: format!("2^{} metafeature products", m.len()), limit: 1 << MAX_K_EFF });
    }
    let mut out: Vec<Monomial> = vec![VarSet::empty(n)];
    for mf in m {
        let extra: Vec<Monomial> = out.iter().map(|s| s.union(mf)).collect();
        for s in extra {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn features_to_polynomial(features: &[Monomial], coefficients: &[f64], n: usize) -> MultilinearPolynomial {
    let mut p = MultilinearPolynomial::zero(n);
    for (m, &c) in features.iter().zip(coefficients) {
        p.add_term(m.clone(), c);
    }
    p.terms.retain(|_, c| *c != 0.0);
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyPath {
    Reused,
    Scratch,
}

impl PolyPath {
    pub fn as_str(self) -> &'static str {
        match self {
            PolyPath::Reused => "reused",
            PolyPath::Scratch => "scratch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyHypothesis {
    pub task_index: usize,
    pub path: PolyPath,
    pub polynomial: MultilinearPolynomial,
}

#[derive(Debug, Clone)]
pub struct PolyTaskOutcome {
    pub task_index: usize,
    pub path: PolyPath,
    /// Regression draws (training plus holdout), failed attempts included.
    pub samples: u64,
    pub mq_queries: u64,
    pub eq_queries: u64,
    pub holdout_mse: f64,
    pub dictionary_size: usize,
    pub new_terms: usize,
    /// `|E(G_TS)| − |M̃|` after the task.
    pub phi: i64,
}

#[derive(Debug, Clone)]
pub struct PolyRepState {
    pub n: usize,
    pub m_tilde: Dictionary,
    pub ts: TargetSet,
    pub hypotheses: Vec<PolyHypothesis>,
    pub scratch_count: usize,
}

impl PolyRepState {
    pub fn new(n: usize) -> Self {
        PolyRepState { n, m_tilde: Dictionary::new(n), ts: TargetSet::new(n), hypotheses: Vec::new(), scratch_count: 0 }
    }

    pub fn predict(&self, task: usize, x: &VarSet) -> f64 {
        self.hypotheses[task].polynomial.eval(x)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "POLYREP v1 n={} m={} t={} h={} scratch={}\n",
            self.n,
            self.m_tilde.len(),
            self.ts.len(),
            self.hypotheses.len(),
            self.scratch_count
        );
        for m in self.m_tilde.metafeatures().iter().chain(self.ts.iter()) {
            s.push_str(&m.to_index_list());
            s.push('\n');
        }
        for h in &self.hypotheses {
            s.push_str(&format!("task {} {} {}\n", h.task_index, h.path.as_str(), h.polynomial.len()));
            for (m, c) in h.polynomial.terms() {
                s.push_str(&format!("{} ; {}\n", fmt_f64(*c), m.to_index_list()));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let header = lines.first().ok_or_else(|| Error::parse(1, "missing POLYREP v1 header"))?;
        let h = crate::boolean::parse_header(header, "POLYREP", &["n", "m", "t", "h", "scratch"]).map_err(|m| Error::parse(1, m))?;
        let (n, nm, nt, nh, scratch_count) = (h[0], h[1], h[2], h[3], h[4]);
        let mut at = 1;
        let next_line = |at: &mut usize| -> Result<(usize, &str)> {
            let l = lines.get(*at).ok_or_else(|| Error::parse(*at + 1, "unexpected end of input"))?;
            *at += 1;
            Ok((*at, l))
        };
        let mut sets = Vec::with_capacity(nm + nt);
        for _ in 0..nm + nt {
            let (ln, l) = next_line(&mut at)?;
            sets.push(VarSet::parse_index_list(n, l).map_err(|e| Error::parse(ln, e))?);
        }
        let ts_terms = sets.split_off(nm);
        let mut hypotheses = Vec::with_capacity(nh);
        for _ in 0..nh {
            let (ln, l) = next_line(&mut at)?;
            let f: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::parse(ln, "expected `task <index> <path> <terms>`");
            if f.len() != 4 || f[0] != "task" {
                return Err(bad());
            }
            let task_index: usize = f[1].parse().map_err(|_| bad())?;
            let path = match f[2] {
                "reused" => PolyPath::Reused,
                "scratch" => PolyPath::Scratch,
                _ => return Err(bad()),
            };
            let count: usize = f[3].parse().map_err(|_| bad())?;
            let mut body = format!("POLY v1 n={n}\n");
            for _ in 0..count {
                let (_, l) = next_line(&mut at)?;
                body.push_str(l);
                body.push('\n');
            }
            let polynomial = MultilinearPolynomial::parse(&body).map_err(|e| match e {
                Error::Parse { msg, .. } => Error::parse(ln, msg),
                e => e,
            })?;
            hypotheses.push(PolyHypothesis { task_index, path, polynomial });
        }
        Ok(PolyRepState {
            n,
            m_tilde: Dictionary::from_metafeatures(n, sets),
            ts: TargetSet::from_targets(n, ts_terms)?,
            hypotheses,
            scratch_count,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PolyLearnConfig {
    pub b: f64,
    pub eps_mse: f64,
    pub t_max: usize,
}

impl PolyLearnConfig {
    /// `eps_mse = 0.01·B²`.
    pub fn new(b: f64, t_max: usize) -> Self {
        PolyLearnConfig { b, eps_mse: 0.01 * b * b, t_max }
    }
}

/// A polynomial task: its hidden target and the seed for its example stream.
#[derive(Debug, Clone)]
pub struct PolyTask {
    pub target: MultilinearPolynomial,
    pub seed: u64,
}

fn potential(ts: &TargetSet, d: &Dictionary) -> i64 {
    implication_edges(ts) as i64 - d.len() as i64
}

fn scratch_learn(target: &MultilinearPolynomial, t_max: usize) -> Result<Interpolation> {
    let mut mq = MqOracle::new(target.clone());
    let mut eq = mq.eq_oracle();
    mq_interpolate(&mut mq, Some(&mut eq), t_max)
}

/// Reuse by regression over products of the current dictionary, else learn
/// exactly from membership queries, add the new terms and re-solve the
/// dictionary from all terms seen.
pub fn run_polynomial_lifelong(tasks: &[PolyTask], dist: &Distribution, cfg: &PolyLearnConfig) -> Result<(PolyRepState, Vec<PolyTaskOutcome>)> {
    let n = dist.dim();
    let mut st = PolyRepState::new(n);
    let mut outcomes = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let ctx = |e: Error| e.at_task(i);
        let features = conjunction_closure(st.m_tilde.metafeatures(), n).map_err(ctx)?;
        let mut oracle = PolyExampleOracle::new(dist.clone(), task.target.clone(), task.seed).map_err(ctx)?;
        let fit = l1_regress(&features, &mut oracle, cfg.b, st.m_tilde.len().max(1), cfg.eps_mse).map_err(ctx)?;
        let (path, polynomial, mq_queries, eq_queries, new_terms) = match &fit {
            RegressionOutcome::Fit { coefficients, .. } => {
                (PolyPath::Reused, features_to_polynomial(&features, coefficients, n), 0, 0, 0)
            }
            RegressionOutcome::NoGoodFit { .. } => {
                let interp = scratch_learn(&task.target, cfg.t_max).map_err(ctx)?;
                let mut added = 0;
                for term in interp.polynomial.terms().keys() {
                    if !st.ts.targets().contains(term) {
                        st.ts.push(term.clone())?;
                        added += 1;
                    }
                }
                st.m_tilde = solve_consistency(&st.ts);
                st.scratch_count += 1;
                (PolyPath::Scratch, interp.polynomial, interp.mq_queries, interp.eq_queries, added)
            }
        };
        st.hypotheses.push(PolyHypothesis { task_index: i, path, polynomial });
        outcomes.push(PolyTaskOutcome {
            task_index: i,
            path,
            samples: fit.samples(),
            mq_queries,
            eq_queries,
            holdout_mse: fit.holdout_mse(),
            dictionary_size: st.m_tilde.len(),
            new_terms,
            phi: potential(&st.ts, &st.m_tilde),
        });
    }
    Ok((st, outcomes))
}

/// Single-layer variant: the dictionary is the set of monomials seen so far,
/// used directly as regression features.
pub fn warmup_single_layer(tasks: &[PolyTask], dist: &Distribution, cfg: &PolyLearnConfig) -> Result<(Vec<Monomial>, Vec<PolyTaskOutcome>)> {
    let mut monomials: Vec<Monomial> = Vec::new();
    let mut outcomes = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let ctx = |e: Error| e.at_task(i);
        let k_eff = (usize::BITS - monomials.len().saturating_sub(1).leading_zeros()).max(1) as usize;
        let mut oracle = PolyExampleOracle::new(dist.clone(), task.target.clone(), task.seed).map_err(ctx)?;
        let fit = l1_regress(&monomials, &mut oracle, cfg.b, k_eff, cfg.eps_mse).map_err(ctx)?;
        let (path, mq_queries, eq_queries, new_terms) = match fit {
            RegressionOutcome::Fit { .. } => (PolyPath::Reused, 0, 0, 0),
            RegressionOutcome::NoGoodFit { .. } => {
                let interp = scratch_learn(&task.target, cfg.t_max).map_err(ctx)?;
                let before = monomials.len();
                for term in interp.polynomial.terms().keys() {
                    if !monomials.contains(term) {
                        monomials.push(term.clone());
                    }
                }
                (PolyPath::Scratch, interp.mq_queries, interp.eq_queries, monomials.len() - before)
            }
        };
        outcomes.push(PolyTaskOutcome {
            task_index: i,
            path,
            samples: fit.samples(),
            mq_queries,
            eq_queries,
            holdout_mse: fit.holdout_mse(),
            dictionary_size: monomials.len(),
            new_terms,
            phi: 0,
        });
    }
    Ok((monomials, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, idx: &[usize]) -> VarSet {
        VarSet::from_one_based(n, idx.iter().copied()).unwrap()
    }

    fn poly(n: usize, terms: &[(&[usize], f64)]) -> MultilinearPolynomial {
        MultilinearPolynomial::from_terms(n, terms.iter().map(|(s, c)| (m(n, s), *c)).collect()).unwrap()
    }

    fn interpolate(p: &MultilinearPolynomial) -> Interpolation {
        let mut mq = MqOracle::new(p.clone());
        let mut eq = mq.eq_oracle();
        mq_interpolate(&mut mq, Some(&mut eq), 64).unwrap()
    }

    #[test]
    fn hand_mobius() {
        let p = poly(4, &[(&[1, 2], 3.0)]);
        assert_eq!(p.eval(&m(4, &[])), 0.0);
        assert_eq!(p.eval(&m(4, &[1])), 0.0);
        assert_eq!(p.eval(&m(4, &[1, 2])), 3.0);
        assert_eq!(mobius_coefficient(&m(4, &[1, 2]), |s| p.eval(s)), 3.0);
        assert_eq!(mobius_coefficient(&m(4, &[1]), |s| p.eval(s)), 0.0);
    }

    #[test]
    fn interpolation_examples() {
        let p = poly(4, &[(&[1, 2], 3.0)]);
        assert_eq!(interpolate(&p).polynomial, p);

        let c = poly(6, &[(&[], 5.0)]);
        let mut mq = MqOracle::new(c.clone());
        let got = mq_interpolate(&mut mq, None, 4).unwrap();
        assert_eq!(got.polynomial, c);
        assert_eq!(mq.history()[0], (m(6, &[]), 5.0));

        let p = poly(8, &[(&[3, 4, 5, 6, 7], 4.0), (&[1, 5, 6, 7, 8], -2.0)]);
        let got = interpolate(&p);
        assert_eq!(got.polynomial, p);
        assert_eq!(got.eq_queries, 1);

        assert!(mq_interpolate(&mut MqOracle::new(p), None, 1).is_err());
    }

    #[test]
    fn cancellation_is_repaired_by_equivalence_queries() {
        // g(1,2) = g(1,2,3) = 0 hides every term from the top-level residual
        let p = poly(3, &[(&[1], 1.0), (&[1, 2], -1.0), (&[1, 3], 1.0), (&[1, 2, 3], -1.0)]);
        assert_eq!(p.eval(&VarSet::full(3)), 0.0);
        let got = interpolate(&p);
        assert!(got.polynomial.approx_eq(&p, 1e-12), "{:?}", got.polynomial);
    }

    #[test]
    fn zeta_transform_reproduces_queries() {
        let p = poly(10, &[(&[1, 4], 2.5), (&[2], -1.0), (&[4, 5, 9], 0.75), (&[], 0.5)]);
        let mut mq = MqOracle::new(p.clone());
        let got = mq_interpolate(&mut mq, None, 10).unwrap().polynomial;
        for (x, v) in mq.history() {
            assert!((got.eval(x) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn poly_text_round_trip() {
        let p = poly(5, &[(&[1, 3], 0.1 + 0.2), (&[], -1.0 / 3.0), (&[5], 1e-300)]);
        let text = p.to_text();
        let q = MultilinearPolynomial::parse(&text).unwrap();
        assert_eq!(p, q);
        for (a, b) in p.terms().values().zip(q.terms().values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert!(MultilinearPolynomial::parse("POLY v1 n=2\n1.0 ; 3\n").is_err());
        assert_eq!(MultilinearPolynomial::parse("POLY v1 n=2\n3 ; 1,2\n5 ; \n").unwrap(), poly(2, &[(&[1, 2], 3.0), (&[], 5.0)]));
    }

    #[test]
    fn exact_mse() {
        let p = poly(3, &[(&[1], 2.0)]);
        let z = MultilinearPolynomial::zero(3);
        assert!((p.mean_squared_distance(&z, &[0.5; 3]) - 2.0).abs() < 1e-15);
        let q = poly(3, &[(&[1], 1.0), (&[2], 1.0)]);
        // E[(x1 + x2)^2] = 1/2 + 1/2 + 2·1/4
        assert!((q.mean_squared_distance(&z, &[0.5; 3]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn regression_examples() {
        let n = 6;
        let dist = Distribution::uniform_cube(n);
        let feats = vec![VarSet::empty(n), m(n, &[1, 2]), m(n, &[3])];
        let target = poly(n, &[(&[1, 2], 10.0)]);
        let mut o = PolyExampleOracle::new(dist.clone(), target.clone(), 1).unwrap();
        let RegressionOutcome::Fit { holdout_mse, coefficients, samples } = l1_regress(&feats, &mut o, 10.0, 2, 1.0).unwrap() else {
            panic!()
        };
        assert!(holdout_mse < 0.05, "{holdout_mse}");
        assert!((coefficients[1] - 10.0).abs() < 0.3);
        assert_eq!(samples, 2 * regression_sample_size(10.0, 2, 1.0) as u64);

        let mut o = PolyExampleOracle::new(dist.clone(), MultilinearPolynomial::zero(n), 2).unwrap();
        let out = l1_regress(&feats, &mut o, 10.0, 2, 1.0).unwrap();
        assert!(matches!(out, RegressionOutcome::Fit { .. }) && out.holdout_mse() == 0.0);

        // 4·x6 has variance 16·(1/4) = 4 outside the feature span
        let off = poly(n, &[(&[6], 4.0)]);
        let mut o = PolyExampleOracle::new(dist, off, 3).unwrap();
        assert!(matches!(l1_regress(&feats, &mut o, 10.0, 2, 1.0).unwrap(), RegressionOutcome::NoGoodFit { .. }));
    }

    #[test]
    fn closure_dedupes() {
        let n = 4;
        let c = conjunction_closure(&[m(n, &[1, 2]), m(n, &[2, 3]), m(n, &[1, 2, 3])], n).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(conjunction_closure(&[], n).unwrap(), vec![VarSet::empty(n)]);
    }

    #[test]
    fn warmup_one_monomial() {
        let n = 5;
        let dist = Distribution::uniform_cube(n);
        let tasks: Vec<PolyTask> = (0..6).map(|i| PolyTask { target: poly(n, &[(&[2, 4], 2.0 + i as f64)]), seed: i }).collect();
        let (mons, out) = warmup_single_layer(&tasks, &dist, &PolyLearnConfig::new(10.0, 16)).unwrap();
        assert_eq!(mons, vec![m(n, &[2, 4])]);
        assert_eq!(out.iter().filter(|o| o.path == PolyPath::Scratch).count(), 1);
    }

    #[test]
    fn polynomial_small_stream_and_state_round_trip() {
        let n = 6;
        let dist = Distribution::uniform_cube(n);
        let a = &[1, 2][..];
        let b = &[3, 4][..];
        let ab = &[1, 2, 3, 4][..];
        let targets = [vec![(ab, 3.0), (a, 1.0)], vec![(b, -2.0), (a, 2.0)], vec![(ab, 1.0), (b, 1.0), (&[][..], 2.0)]];
        let tasks: Vec<PolyTask> =
            targets.iter().enumerate().map(|(i, t)| PolyTask { target: poly(n, t), seed: 10 + i as u64 }).collect();
        let (st, out) = run_polynomial_lifelong(&tasks, &dist, &PolyLearnConfig::new(10.0, 16)).unwrap();
        assert!(st.m_tilde.len() <= 2);
        assert!(st.m_tilde.reconstructs(&st.ts));
        assert!(out.iter().all(|o| o.path == PolyPath::Reused || o.new_terms >= 1));
        let back = PolyRepState::parse(&st.to_text()).unwrap();
        assert_eq!(back.hypotheses, st.hypotheses);
        assert_eq!(back.m_tilde.metafeatures(), st.m_tilde.metafeatures());
        assert_eq!(back.ts, st.ts);
    }
}
