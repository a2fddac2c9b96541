//! Conjunction learners on top of the Boolean core: exact learning from
//! equivalence queries (directly, over a metafeature dictionary, and with
//! Winnow over anchor-set candidates) and PAC transfer over product
//! distributions.

use crate::boolean::{covered_vars, implication_edges, solve_consistency, Dictionary, Monomial, TargetSet, VarSet};
use crate::error::{Error, Result};
use crate::sampling::{rng_from, ConjunctionEqOracle, ConjunctionOracle, Distribution, EqAnswer};

#[derive(Debug, Clone, PartialEq)]
pub struct EqLearnResult {
    pub hypothesis: Monomial,
    pub queries: u64,
}

/// Elimination learner: start from all variables and drop every variable
/// that is 0 in a positive counterexample. At most `n + 1` queries.
pub fn eq_learn_conjunction(oracle: &mut ConjunctionEqOracle) -> Result<EqLearnResult> {
    let n = oracle.n();
    let start = oracle.query_count();
    let mut h = VarSet::full(n);
    for _ in 0..=n + 1 {
        match oracle.query(&h)? {
            EqAnswer::Equivalent => return Ok(EqLearnResult { hypothesis: h, queries: oracle.query_count() - start }),
            EqAnswer::Counterexample { x, label } => {
                if label < 0 || h.is_subset(&x) {
                    return Err(Error::OracleInconsistency(format!(
                        "counterexample {x} labeled {label} against hypothesis {h}; targets must be monotone conjunctions"
                    )));
                }
                h.intersect_with(&x);
            }
        }
    }
    Err(Error::OracleInconsistency("elimination did not converge within n+1 queries".into()))
}

/// Learns a conjunction over the derived bits `[m̃_j ⊆ x]`, i.e. a union of
/// dictionary elements. `Ok(None)` when a negative counterexample shows the
/// target is not such a union.
fn eq_learn_over_dictionary(oracle: &mut ConjunctionEqOracle, d: &Dictionary) -> Result<Option<(Vec<usize>, Monomial)>> {
    let mut keep: Vec<usize> = (0..d.len()).collect();
    loop {
        let mut h = VarSet::empty(oracle.n());
        for &j in &keep {
            h.union_with(&d.metafeatures()[j]);
        }
        match oracle.query(&h)? {
            EqAnswer::Equivalent => return Ok(Some((keep, h))),
            EqAnswer::Counterexample { label, .. } if label < 0 => return Ok(None),
            EqAnswer::Counterexample { x, .. } => {
                let before = keep.len();
                keep.retain(|&j| d.metafeatures()[j].is_subset(&x));
                if keep.len() == before {
                    return Err(Error::OracleInconsistency(format!("positive counterexample {x} agrees with {h}")));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjPath {
    Reused,
    Scratch,
}

impl ConjPath {
    pub fn as_str(self) -> &'static str {
        match self {
            ConjPath::Reused => "reused",
            ConjPath::Scratch => "scratch",
        }
    }
}

/// One row of a session transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjTaskRecord {
    pub task_index: usize,
    pub path: ConjPath,
    /// Equivalence queries, or labeled samples for the PAC driver.
    pub cost: u64,
    pub dictionary_size: usize,
    pub phi: i64,
}

pub const TRANSCRIPT_HEADER: &str = "task_index,path,queries_or_samples,dictionary_size,potential_phi";

pub fn transcript_csv(rows: &[ConjTaskRecord]) -> String {
    let mut s = format!("{TRANSCRIPT_HEADER}\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.task_index, r.path.as_str(), r.cost, r.dictionary_size, r.phi));
    }
    s
}

#[derive(Debug, Clone)]
pub struct DictionarySession {
    pub records: Vec<ConjTaskRecord>,
    pub hypotheses: Vec<Monomial>,
    pub ts: TargetSet,
    pub dictionary: Dictionary,
}

impl DictionarySession {
    pub fn total_cost(&self) -> u64 {
        self.records.iter().map(|r| r.cost).sum()
    }

    pub fn scratch_count(&self) -> usize {
        self.records.iter().filter(|r| r.path == ConjPath::Scratch).count()
    }
}

fn phi(ts: &TargetSet, d: &Dictionary) -> i64 {
    let edges = if ts.is_empty() { ts.n() * ts.n().saturating_sub(1) } else { implication_edges(ts) };
    edges as i64 - d.len() as i64
}

/// Each target is first learned over the current dictionary (at most
/// `|D| + 1` queries); if that fails it is learned from scratch, added to the
/// scratch set, and the dictionary is re-solved.
pub fn eq_dictionary_session(targets: &[Monomial], n: usize) -> Result<DictionarySession> {
    let mut ts = TargetSet::new(n);
    let mut d = Dictionary::new(n);
    let mut records = Vec::with_capacity(targets.len());
    let mut hypotheses = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let step = |ts: &mut TargetSet, d: &mut Dictionary| -> Result<(ConjPath, u64, Monomial)> {
            if t.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: t.n() });
            }
            let mut oracle = ConjunctionEqOracle::new(t.clone());
            if !d.is_empty() {
                if let Some((_, h)) = eq_learn_over_dictionary(&mut oracle, d)? {
                    return Ok((ConjPath::Reused, oracle.query_count(), h));
                }
            }
            let h = eq_learn_conjunction(&mut oracle)?.hypothesis;
            ts.push(h.clone())?;
            *d = solve_consistency(ts);
            Ok((ConjPath::Scratch, oracle.query_count(), h))
        };
        let (path, cost, h) = step(&mut ts, &mut d).map_err(|e| e.at_task(i))?;
        records.push(ConjTaskRecord { task_index: i, path, cost, dictionary_size: d.len(), phi: phi(&ts, &d) });
        hypotheses.push(h);
    }
    Ok(DictionarySession { records, hypotheses, ts, dictionary: d })
}

/// `2 + 3k(log₂N + 1)`.
pub fn winnow_mistake_bound(k: usize, n_features: usize) -> u64 {
    (2.0 + 3.0 * k as f64 * ((n_features.max(1) as f64).log2() + 1.0)).floor() as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinnowState {
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub mistake_count: u64,
}

impl WinnowState {
    pub fn new(n_features: usize) -> Self {
        WinnowState { weights: vec![1.0; n_features], threshold: n_features as f64, mistake_count: 0 }
    }

    /// Predicts the conjunction: true iff the weight of features *not*
    /// contained in `x` stays below the threshold.
    pub fn predict(&self, features: &[Monomial], x: &VarSet) -> bool {
        let s: f64 = features.iter().zip(&self.weights).filter(|(f, _)| !f.is_subset(x)).map(|(_, w)| w).sum();
        s < self.threshold
    }

    /// Multiplies the weights of features missing from `x` by `factor`.
    fn update(&mut self, features: &[Monomial], x: &VarSet, factor: f64) -> bool {
        let mut any = false;
        for (f, w) in features.iter().zip(self.weights.iter_mut()) {
            if !f.is_subset(x) {
                *w *= factor;
                any = true;
            }
        }
        self.mistake_count += 1;
        any
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WinnowOutcome {
    Learned { hypothesis: Monomial, mistakes: u64, queries: u64 },
    /// The mistake envelope was exhausted, or a counterexample no feature can
    /// explain: the target is not a sparse conjunction of the features.
    NotExpressible { mistakes: u64, queries: u64 },
}

impl WinnowOutcome {
    pub fn queries(&self) -> u64 {
        match self {
            WinnowOutcome::Learned { queries, .. } | WinnowOutcome::NotExpressible { queries, .. } => *queries,
        }
    }

    pub fn mistakes(&self) -> u64 {
        match self {
            WinnowOutcome::Learned { mistakes, .. } | WinnowOutcome::NotExpressible { mistakes, .. } => *mistakes,
        }
    }
}

/// Winnow over the derived bits `[f_j ⊆ x]`, run on the complement problem:
/// `¬T` is a monotone disjunction of the bits `[f_j ⊄ x]`. Every
/// counterexample is a mistake; the run stops once the mistakes would exceed
/// [`winnow_mistake_bound`].
pub fn winnow_eq_learn(oracle: &mut ConjunctionEqOracle, features: &[Monomial], k: usize) -> Result<WinnowOutcome> {
    let n = oracle.n();
    if let Some(f) = features.iter().find(|f| f.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: f.n() });
    }
    let start = oracle.query_count();
    let bound = winnow_mistake_bound(k, features.len());
    let mut st = WinnowState::new(features.len());
    loop {
        let answer = oracle.query_monotone(&|x| st.predict(features, x));
        let queries = oracle.query_count() - start;
        match answer {
            EqAnswer::Equivalent => {
                // The minimal true point of a monotone conjunction is its variable set.
                let mut h = VarSet::full(n);
                for i in 0..n {
                    h.remove(i);
                    if !st.predict(features, &h) {
                        h.insert(i);
                    }
                }
                return Ok(WinnowOutcome::Learned { hypothesis: h, mistakes: st.mistake_count, queries });
            }
            EqAnswer::Counterexample { x, label } => {
                if st.mistake_count + 1 > bound {
                    return Ok(WinnowOutcome::NotExpressible { mistakes: st.mistake_count, queries });
                }
                // Positive: ¬T was over-predicted, demote. Negative: promote.
                let factor = if label > 0 { 0.5 } else { 2.0 };
                if !st.update(features, &x, factor) {
                    return Ok(WinnowOutcome::NotExpressible { mistakes: st.mistake_count, queries });
                }
            }
        }
    }
}

/// All `y` with `1 ≤ |y| ≤ c`, by size then lexicographically.
pub fn anchor_patterns(n: usize, c: usize) -> Vec<VarSet> {
    crate::halfspace::subsets_up_to(n, c)
        .into_iter()
        .map(|idx| VarSet::from_indices(n, idx).expect("indices below n"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSessionRecord {
    pub task_index: usize,
    pub path: ConjPath,
    pub queries: u64,
    pub winnow_mistakes: u64,
    /// `Σ_y |m̃_y|` after the task.
    pub potential: usize,
    /// Ground-truth anchor sets whose candidate shrank at this task.
    pub anchor_shrinks: usize,
}

#[derive(Debug, Clone)]
pub struct AnchorSession {
    pub patterns: Vec<VarSet>,
    pub candidates: Vec<Monomial>,
    pub records: Vec<AnchorSessionRecord>,
    pub hypotheses: Vec<Monomial>,
    /// `(task, j)` pairs where `m_j ⪯ m̃_{y_j}` failed.
    pub invariant_violations: Vec<(usize, usize)>,
    pub mistake_bound: u64,
}

impl AnchorSession {
    pub fn scratch_count(&self) -> usize {
        self.records.iter().filter(|r| r.path == ConjPath::Scratch).count()
    }

    pub fn total_queries(&self) -> u64 {
        self.records.iter().map(|r| r.queries).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("task_index,path,queries_or_samples,winnow_mistakes,potential_phi\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{},{}\n", r.task_index, r.path.as_str(), r.queries, r.winnow_mistakes, r.potential));
        }
        s
    }
}

/// Keeps one candidate `m̃_y` per pattern `y` of weight `≤ c`, initialized to
/// all variables. Each target is tried with Winnow over the candidates; on
/// failure it is learned from scratch and `m̃_y ← m̃_y ∧ T` for every `y ⪯ T`.
/// `truth` optionally lists the planted `(y_j, m_j)` pairs for auditing.
pub fn anchor_set_session(
    targets: &[Monomial],
    n: usize,
    c: usize,
    k: usize,
    truth: Option<&[(VarSet, Monomial)]>,
) -> Result<AnchorSession> {
    if c == 0 || c > 3 {
        return Err(Error::InvalidArgument(format!("anchor weight c={c} outside 1..=3")));
    }
    let patterns = anchor_patterns(n, c);
    let mut candidates = vec![VarSet::full(n); patterns.len()];
    let truth_idx: Vec<(usize, &Monomial)> = truth
        .unwrap_or(&[])
        .iter()
        .map(|(y, m)| (patterns.iter().position(|p| p == y).expect("planted anchor weight ≤ c"), m))
        .collect();
    let mistake_bound = winnow_mistake_bound(k, patterns.len());
    let mut records = Vec::with_capacity(targets.len());
    let mut hypotheses = Vec::with_capacity(targets.len());
    let mut invariant_violations = Vec::new();
    for (i, t) in targets.iter().enumerate() {
        if t.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: t.n() }.at_task(i));
        }
        let mut oracle = ConjunctionEqOracle::new(t.clone());
        let w = winnow_eq_learn(&mut oracle, &candidates, k).map_err(|e| e.at_task(i))?;
        let mistakes = w.mistakes();
        let (path, h, shrinks) = match w {
            WinnowOutcome::Learned { hypothesis, .. } => (ConjPath::Reused, hypothesis, 0),
            WinnowOutcome::NotExpressible { .. } => {
                let h = eq_learn_conjunction(&mut oracle).map_err(|e| e.at_task(i))?.hypothesis;
                let before: Vec<usize> = truth_idx.iter().map(|&(p, _)| candidates[p].len()).collect();
                for (p, y) in patterns.iter().enumerate() {
                    if y.is_subset(&h) {
                        candidates[p].intersect_with(&h);
                    }
                }
                let shrinks = truth_idx.iter().zip(&before).filter(|((p, _), &b)| candidates[*p].len() < b).count();
                (ConjPath::Scratch, h, shrinks)
            }
        };
        for (j, &(p, m)) in truth_idx.iter().enumerate() {
            if !m.is_subset(&candidates[p]) {
                invariant_violations.push((i, j));
            }
        }
        records.push(AnchorSessionRecord {
            task_index: i,
            path,
            queries: oracle.query_count(),
            winnow_mistakes: mistakes,
            potential: candidates.iter().map(|m| m.len()).sum(),
            anchor_shrinks: shrinks,
        });
        hypotheses.push(h);
    }
    Ok(AnchorSession { patterns, candidates, records, hypotheses, invariant_violations, mistake_bound })
}

/// Variables that are 0 in fewer than an `ε/(4n)` fraction of one unlabeled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificantVarFilter {
    pub insignificant: VarSet,
    pub sample_size_used: u64,
    pub threshold: f64,
}

impl SignificantVarFilter {
    pub fn build(dist: &Distribution, eps: f64, samples: u64, seed: u64) -> Result<Self> {
        let n = dist.dim();
        if dist.is_rotationally_symmetric() {
            return Err(Error::InvalidArgument("filter needs a product distribution".into()));
        }
        let mut rng = rng_from(seed);
        let mut zeros = vec![0u64; n];
        for _ in 0..samples {
            let x = dist.draw_bits(&mut rng);
            for (i, z) in zeros.iter_mut().enumerate() {
                *z += !x.contains(i) as u64;
            }
        }
        let threshold = eps / (4.0 * n as f64);
        let insignificant = VarSet::from_indices(
            n,
            (0..n).filter(|&i| (zeros[i] as f64) < threshold * samples as f64),
        )?;
        Ok(SignificantVarFilter { insignificant, sample_size_used: samples, threshold })
    }

    /// Keeps only examples with every insignificant variable set to 1.
    pub fn admits(&self, x: &VarSet) -> bool {
        self.insignificant.is_subset(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductLearnerParams {
    pub eps: f64,
    pub delta: f64,
    /// Dictionary size the per-task sample `s2` is sized for.
    pub k: usize,
    pub s1: u64,
    pub s2: u64,
    pub s3: u64,
}

impl ProductLearnerParams {
    /// `s1 = ⌈4n/ε·ln(4n/δ)⌉`, `s2 = ⌈4k/ε·ln(4m/δ)⌉`, `s3 = ⌈4n/ε·ln(4nk/δ)⌉`.
    pub fn new(n: usize, m: usize, k: usize, eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) || n == 0 || k == 0 {
            return Err(Error::InvalidArgument("need n, k ≥ 1 and eps, delta in (0,1)".into()));
        }
        let (nf, mf, kf) = (n as f64, m.max(1) as f64, k as f64);
        let c = |a: f64, b: f64| (4.0 * a / eps * b.ln()).ceil() as u64;
        Ok(ProductLearnerParams {
            eps,
            delta,
            k,
            s1: c(nf, 4.0 * nf / delta),
            s2: c(kf, 4.0 * mf / delta),
            s3: c(nf, 4.0 * nf * kf / delta),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProductTask {
    pub target: Monomial,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ProductLearnerRun {
    pub filter: SignificantVarFilter,
    pub session: DictionarySession,
    /// Labeled draws per task; the unlabeled filter sample is kept separately.
    pub labeled_samples: Vec<u64>,
}

impl ProductLearnerRun {
    pub fn total_samples(&self) -> u64 {
        self.filter.sample_size_used + self.labeled_samples.iter().sum::<u64>()
    }
}

/// Intersection of the positive examples' variables; `None` if a negative
/// example satisfies it.
fn consistent_over_vars(examples: &[(VarSet, i8)], n: usize) -> Option<Monomial> {
    let mut h = VarSet::full(n);
    for (x, _) in examples.iter().filter(|(_, y)| *y > 0) {
        h.intersect_with(x);
    }
    (!examples.iter().any(|(x, y)| *y < 0 && h.is_subset(x))).then_some(h)
}

/// Union of the dictionary elements contained in every positive example;
/// `None` if a negative example satisfies it.
fn consistent_over_dictionary(examples: &[(VarSet, i8)], d: &Dictionary) -> Option<Monomial> {
    let mut h = VarSet::empty(d.n());
    for m in d.metafeatures() {
        if examples.iter().filter(|(_, y)| *y > 0).all(|(x, _)| m.is_subset(x)) {
            h.union_with(m);
        }
    }
    (!examples.iter().any(|(x, y)| *y < 0 && h.is_subset(x))).then_some(h)
}

fn draw_filtered(oracle: &mut ConjunctionOracle, count: u64, filter: &SignificantVarFilter) -> Vec<(VarSet, i8)> {
    (0..count).map(|_| oracle.draw()).filter(|(x, _)| filter.admits(x)).collect()
}

/// Transfer learning of conjunctions over a product distribution.
pub fn run_product_learner(dist: &Distribution, tasks: &[ProductTask], params: &ProductLearnerParams, seed: u64) -> Result<ProductLearnerRun> {
    let n = dist.dim();
    let filter = SignificantVarFilter::build(dist, params.eps, params.s1, seed)?;
    let mut ts = TargetSet::new(n);
    let mut d = Dictionary::new(n);
    let mut records = Vec::with_capacity(tasks.len());
    let mut hypotheses = Vec::with_capacity(tasks.len());
    let mut labeled_samples = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let mut oracle = ConjunctionOracle::new(dist.clone(), task.target.clone(), task.seed).map_err(|e| e.at_task(i))?;
        let sample = draw_filtered(&mut oracle, params.s2, &filter);
        let (path, h) = match consistent_over_dictionary(&sample, &d) {
            Some(h) => (ConjPath::Reused, h),
            None => {
                let sample = draw_filtered(&mut oracle, params.s3, &filter);
                let h = consistent_over_vars(&sample, n)
                    .ok_or_else(|| Error::NoConsistentHypothesis("no conjunction fits the scratch sample".into()).at_task(i))?
                    .difference(&filter.insignificant);
                ts.push(h.clone()).map_err(|e| e.at_task(i))?;
                d = solve_consistency(&ts);
                (ConjPath::Scratch, h)
            }
        };
        records.push(ConjTaskRecord { task_index: i, path, cost: oracle.draws(), dictionary_size: d.len(), phi: phi(&ts, &d) });
        labeled_samples.push(oracle.draws());
        hypotheses.push(h);
    }
    Ok(ProductLearnerRun { filter, session: DictionarySession { records, hypotheses, ts, dictionary: d }, labeled_samples })
}

/// True iff `t` is the union of the dictionary elements it contains.
pub fn expressible(t: &Monomial, d: &Dictionary) -> bool {
    &covered_vars(t, d) == t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{estimate_error, Predictor};

    fn m(n: usize, idx: &[usize]) -> Monomial {
        VarSet::from_one_based(n, idx.iter().copied()).unwrap()
    }

    #[test]
    fn elimination_examples() {
        let mut o = ConjunctionEqOracle::new(VarSet::full(5));
        assert_eq!(eq_learn_conjunction(&mut o).unwrap().queries, 1);

        let mut o = ConjunctionEqOracle::new(m(3, &[1]));
        let r = eq_learn_conjunction(&mut o).unwrap();
        assert_eq!(r.hypothesis, m(3, &[1]));
        assert!(r.queries <= 3);

        let mut o = ConjunctionEqOracle::new(VarSet::empty(6));
        let r = eq_learn_conjunction(&mut o).unwrap();
        assert!(r.hypothesis.is_empty() && r.queries <= 7);
    }

    #[test]
    fn elimination_never_exceeds_n_plus_one() {
        let n = 9;
        for mask in 0u32..(1 << n) {
            let t = VarSet::from_indices(n, (0..n).filter(|b| mask >> b & 1 == 1)).unwrap();
            let r = eq_learn_conjunction(&mut ConjunctionEqOracle::new(t.clone())).unwrap();
            assert_eq!(r.hypothesis, t);
            assert!(r.queries <= n as u64 + 1);
        }
    }

    #[test]
    fn dictionary_session_repeats() {
        let n = 8;
        let t = m(n, &[2, 5, 7]);
        let s = eq_dictionary_session(&vec![t.clone(); 10], n).unwrap();
        assert_eq!(s.scratch_count(), 1);
        assert!(s.total_cost() <= (n as u64 + 1) + 9 * 2);
        assert!(s.hypotheses.iter().all(|h| h == &t));
    }

    #[test]
    fn dictionary_session_unions() {
        let n = 9;
        let a = m(n, &[1, 2]);
        let b = m(n, &[3, 4, 5]);
        let c = m(n, &[6]);
        let targets = vec![a.union(&b), b.union(&c), a.clone(), a.union(&b).union(&c), c.union(&a), m(n, &[9])];
        let s = eq_dictionary_session(&targets, n).unwrap();
        let paths: Vec<ConjPath> = s.records.iter().map(|r| r.path).collect();
        use ConjPath::*;
        // The re-solved dictionary is {12, 345, 3456}, so {1,2,6} is new.
        assert_eq!(paths, vec![Scratch, Scratch, Scratch, Reused, Scratch, Scratch]);
        assert_eq!(&s.hypotheses, &targets);
        let csv = transcript_csv(&s.records);
        assert!(csv.starts_with(TRANSCRIPT_HEADER));
        assert_eq!(csv.lines().count(), targets.len() + 1);
    }

    #[test]
    fn winnow_single_feature() {
        let n = 6;
        let features = vec![m(n, &[1]), m(n, &[2, 3]), m(n, &[4]), m(n, &[5, 6])];
        let mut o = ConjunctionEqOracle::new(m(n, &[2, 3]));
        match winnow_eq_learn(&mut o, &features, 1).unwrap() {
            WinnowOutcome::Learned { hypothesis, mistakes, queries } => {
                assert_eq!(hypothesis, m(n, &[2, 3]));
                assert!(mistakes <= 11);
                assert_eq!(queries, mistakes + 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(winnow_mistake_bound(1, 4), 11);
        assert_eq!(winnow_mistake_bound(3, 256), 83);
    }

    #[test]
    fn winnow_empty_target() {
        let n = 4;
        let features = vec![m(n, &[1]), m(n, &[2])];
        let mut o = ConjunctionEqOracle::new(VarSet::empty(n));
        let out = winnow_eq_learn(&mut o, &features, 1).unwrap();
        assert!(matches!(out, WinnowOutcome::Learned { .. }));
        assert!(out.mistakes() <= 1);
    }

    #[test]
    fn winnow_gives_up_on_unexpressible_targets() {
        let n = 5;
        let features = vec![m(n, &[1, 2]), m(n, &[3])];
        let mut o = ConjunctionEqOracle::new(m(n, &[1]));
        let out = winnow_eq_learn(&mut o, &features, 1).unwrap();
        assert!(matches!(out, WinnowOutcome::NotExpressible { .. }));
        assert!(out.mistakes() <= winnow_mistake_bound(1, 2));
    }

    #[test]
    fn anchor_session_basics() {
        let n = 7;
        let pats = anchor_patterns(n, 2);
        assert_eq!(pats.len(), 7 + 21);
        let t = m(n, &[1, 3, 4]);
        let s = anchor_set_session(&vec![t.clone(); 8], n, 2, 2, None).unwrap();
        assert_eq!(s.scratch_count(), 1);
        assert!(s.hypotheses.iter().all(|h| h == &t));
        let potentials: Vec<usize> = s.records.iter().map(|r| r.potential).collect();
        assert!(potentials.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn anchor_session_with_truth() {
        let n = 8;
        let m1 = m(n, &[1, 2, 3]);
        let m2 = m(n, &[3, 4, 5]);
        let m3 = m(n, &[6, 7]);
        let truth = vec![(m(n, &[1]), m1.clone()), (m(n, &[4]), m2.clone()), (m(n, &[6]), m3.clone())];
        let targets = vec![m1.union(&m2), m2.union(&m3), m1.union(&m3), m1.clone(), m1.union(&m2).union(&m3), m2.clone()];
        let s = anchor_set_session(&targets, n, 1, 3, Some(&truth)).unwrap();
        assert!(s.invariant_violations.is_empty());
        assert_eq!(&s.hypotheses, &targets);
        assert!(s.scratch_count() <= n * 3);
        for r in s.records.iter().filter(|r| r.path == ConjPath::Scratch) {
            assert!(r.anchor_shrinks >= 1, "{r:?}");
        }
        for r in s.records.iter().filter(|r| r.path == ConjPath::Reused) {
            assert!(r.winnow_mistakes <= s.mistake_bound);
        }
    }

    #[test]
    fn filter_catches_nearly_constant_variables() {
        let n = 8;
        let eps = 0.1;
        let mut p = vec![0.5; n];
        p[3] = 1.0 - eps / (8.0 * n as f64);
        let dist = Distribution::product_bernoulli(p).unwrap();
        let f = SignificantVarFilter::build(&dist, eps, 200_000, 1).unwrap();
        assert_eq!(f.insignificant, m(n, &[4]));
        assert_eq!(f.threshold, eps / 32.0);
    }

    #[test]
    fn params_formulas() {
        let p = ProductLearnerParams::new(16, 50, 4, 0.1, 0.05).unwrap();
        assert_eq!(p.s1, (640.0f64 * (1280.0f64).ln()).ceil() as u64);
        assert_eq!(p.s2, (160.0f64 * (4000.0f64).ln()).ceil() as u64);
        assert_eq!(p.s3, (640.0f64 * (5120.0f64).ln()).ceil() as u64);
    }

    #[test]
    fn product_learner_small_run() {
        let n = 10;
        let a = m(n, &[1, 2]);
        let b = m(n, &[3]);
        let c = m(n, &[4, 5]);
        let targets = vec![a.union(&b), b.union(&c), a.clone(), c.union(&a), b.clone(), a.union(&b), c.clone()];
        let tasks: Vec<ProductTask> = targets.iter().enumerate().map(|(i, t)| ProductTask { target: t.clone(), seed: 50 + i as u64 }).collect();
        let dist = Distribution::uniform_cube(n);
        let params = ProductLearnerParams::new(n, tasks.len(), 3, 0.1, 0.05).unwrap();
        let run = run_product_learner(&dist, &tasks, &params, 7).unwrap();
        assert!(run.filter.insignificant.is_empty());
        for (i, (h, t)) in run.session.hypotheses.iter().zip(&targets).enumerate() {
            if run.session.records[i].path == ConjPath::Scratch {
                assert_eq!(h, t);
            }
            let e = estimate_error(&Predictor::Conjunction(h), &Predictor::Conjunction(t), &dist, 10_000, i as u64).unwrap();
            assert!(e.estimate <= 0.1);
        }
        assert!(run.session.records[5].path == ConjPath::Reused);
        assert_eq!(run.session.records[5].cost, params.s2);
        assert_eq!(run.total_samples(), params.s1 + run.labeled_samples.iter().sum::<u64>());
        assert!(expressible(&targets[3], &run.session.dictionary));
    }
}
