//! Monomials over `{0,1}^n` as bitsets, the consistency solver for
//! anchored monomial dictionaries, an exhaustive set-basis oracle, and the
//! online dictionary session with its edge-counting potential.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A set of variables, stored 0-based as a fixed-width bitset. Also used for
/// points of `{0,1}^n` (the set of coordinates equal to 1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VarSet {
    n: usize,
    words: Vec<u64>,
}

pub type Monomial = VarSet;

pub const MAX_VARS: usize = 4096;

#[inline]
fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

impl VarSet {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VARS, "at most {MAX_VARS} variables");
        VarSet { n, words: vec![0; word_count(n)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = VarSet::empty(n);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim();
        s
    }

    /// Builds from 0-based indices.
    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, idx: I) -> Result<Self> {
        let mut s = VarSet::empty(n);
        for i in idx {
            if i >= n {
                return Err(Error::InvalidArgument(format!("variable {} outside 1..={n}", i + 1)));
            }
            s.insert(i);
        }
        Ok(s)
    }

    /// Builds from 1-based variable names.
    pub fn from_one_based<I: IntoIterator<Item = usize>>(n: usize, idx: I) -> Result<Self> {
        let mut s = VarSet::empty(n);
        for i in idx {
            if i == 0 || i > n {
                return Err(Error::InvalidArgument(format!("variable {i} outside 1..={n}")));
            }
            s.insert(i - 1);
        }
        Ok(s)
    }

    fn trim(&mut self) {
        let r = self.n % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn set(&mut self, i: usize, value: bool) {
        if value {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    pub fn toggled(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.words[i / 64] ^= 1 << (i % 64);
        s
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn is_subset(&self, other: &VarSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_proper_subset(&self, other: &VarSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn intersects(&self, other: &VarSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn intersect(&self, other: &VarSet) -> VarSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn intersect_with(&mut self, other: &VarSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn union_with(&mut self, other: &VarSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference(&self, other: &VarSet) -> VarSet {
        let mut s = self.clone();
        for (a, b) in s.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        s
    }

    pub fn complement(&self) -> VarSet {
        let mut s = self.clone();
        for w in s.words.iter_mut() {
            *w = !*w;
        }
        s.trim();
        s
    }

    /// 0-based indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn first(&self) -> Option<usize> {
        self.iter().next()
    }

    /// Evaluates the monomial at point `x`.
    #[inline]
    pub fn eval(&self, x: &VarSet) -> bool {
        self.is_subset(x)
    }

    /// Orders by size, then lexicographically by sorted index list.
    pub fn size_lex_cmp(&self, other: &VarSet) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.iter().cmp(other.iter()))
    }

    /// Comma-separated 1-based names, as in the text formats.
    pub fn to_index_list(&self) -> String {
        let v: Vec<String> = self.iter().map(|i| (i + 1).to_string()).collect();
        v.join(",")
    }

    /// Parses a comma-separated, strictly increasing 1-based list.
    pub fn parse_index_list(n: usize, s: &str) -> std::result::Result<VarSet, String> {
        let s = s.trim();
        let mut set = VarSet::empty(n);
        if s.is_empty() {
            return Ok(set);
        }
        let mut prev = 0usize;
        for tok in s.split(',') {
            let i: usize = tok.trim().parse().map_err(|_| format!("bad variable index {tok:?}"))?;
            if i == 0 || i > n {
                return Err(format!("variable {i} outside 1..={n}"));
            }
            if i <= prev {
                return Err("indices must be strictly increasing".into());
            }
            prev = i;
            set.insert(i - 1);
        }
        Ok(set)
    }
}

impl Ord for VarSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| self.size_lex_cmp(other))
    }
}

impl PartialOrd for VarSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_index_list())
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_index_list())
    }
}

/// Targets in arrival order; duplicates are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    n: usize,
    targets: Vec<Monomial>,
}

impl TargetSet {
    pub fn new(n: usize) -> Self {
        TargetSet { n, targets: Vec::new() }
    }

    pub fn from_targets(n: usize, targets: Vec<Monomial>) -> Result<Self> {
        if let Some(t) = targets.iter().find(|t| t.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: t.n() });
        }
        Ok(TargetSet { n, targets })
    }

    pub fn push(&mut self, t: Monomial) -> Result<()> {
        if t.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: t.n() });
        }
        self.targets.push(t);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[Monomial] {
        &self.targets
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Monomial> {
        self.targets.iter()
    }

    /// `N(TS, z)`: the positions of the targets containing variable `z`.
    pub fn neighborhood(&self, z: usize) -> VarSet {
        let mut s = VarSet::empty(self.targets.len());
        for (r, t) in self.targets.iter().enumerate() {
            if t.contains(z) {
                s.insert(r);
            }
        }
        s
    }

    /// Intersection of all targets containing `y`; `None` if no target does.
    pub fn closure(&self, y: &VarSet) -> Option<VarSet> {
        let mut acc: Option<VarSet> = None;
        for t in self.targets.iter().filter(|t| y.is_subset(t)) {
            match acc.as_mut() {
                None => acc = Some(t.clone()),
                Some(a) => a.intersect_with(t),
            }
        }
        acc
    }

    /// Union of all target variables.
    pub fn support(&self) -> VarSet {
        let mut s = VarSet::empty(self.n);
        for t in &self.targets {
            s.union_with(t);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    n: usize,
    metafeatures: Vec<Monomial>,
    /// For each metafeature, the target positions whose intersection produced it.
    provenance: Vec<Vec<usize>>,
}

impl Dictionary {
    pub fn new(n: usize) -> Self {
        Dictionary { n, metafeatures: Vec::new(), provenance: Vec::new() }
    }

    pub fn from_metafeatures(n: usize, metafeatures: Vec<Monomial>) -> Self {
        let provenance = vec![Vec::new(); metafeatures.len()];
        Dictionary { n, metafeatures, provenance }
    }

    pub fn push(&mut self, m: Monomial, provenance: Vec<usize>) {
        self.metafeatures.push(m);
        self.provenance.push(provenance);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.metafeatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metafeatures.is_empty()
    }

    pub fn metafeatures(&self) -> &[Monomial] {
        &self.metafeatures
    }

    pub fn provenance(&self) -> &[Vec<usize>] {
        &self.provenance
    }

    /// Indices of metafeatures contained in `t`.
    pub fn contained_in(&self, t: &VarSet) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.metafeatures[j].is_subset(t)).collect()
    }

    /// Positions of targets that are not the union of their contained metafeatures.
    pub fn reconstruction_failures(&self, ts: &TargetSet) -> Vec<usize> {
        (0..ts.len()).filter(|&r| covered_vars(&ts.targets()[r], self) != ts.targets()[r]).collect()
    }

    pub fn reconstructs(&self, ts: &TargetSet) -> bool {
        self.reconstruction_failures(ts).is_empty()
    }
}

/// Union of the dictionary monomials contained in `t`.
pub fn covered_vars(t: &Monomial, d: &Dictionary) -> VarSet {
    let mut s = VarSet::empty(t.n());
    for m in d.metafeatures() {
        if m.is_subset(t) {
            s.union_with(m);
        }
    }
    s
}

/// Greedy consistency solver. Repeatedly takes the first target not yet
/// reconstructed, picks its least-index uncovered variable `z` with
/// inclusion-minimal `N(TS, z)`, and adds the intersection of all targets
/// containing `z`. Each round covers `z` in its target, so the result always
/// reconstructs `ts`; the anchor assumption is what keeps it small.
pub fn solve_consistency(ts: &TargetSet) -> Dictionary {
    let n = ts.n();
    let mut d = Dictionary::new(n);
    let mut covered: Vec<VarSet> = ts.iter().map(|_| VarSet::empty(n)).collect();
    let mut next = 0;
    while next < ts.len() {
        let t = &ts.targets()[next];
        if &covered[next] == t {
            next += 1;
            continue;
        }
        let uncovered: Vec<usize> = t.difference(&covered[next]).iter().collect();
        let nbhd: Vec<VarSet> = uncovered.iter().map(|&z| ts.neighborhood(z)).collect();
        let pick = (0..uncovered.len())
            .find(|&a| !(0..uncovered.len()).any(|b| nbhd[b].is_proper_subset(&nbhd[a])))
            .expect("strict containment is acyclic");
        let containing: Vec<usize> = nbhd[pick].iter().collect();
        let mut m = ts.targets()[containing[0]].clone();
        for &r in &containing[1..] {
            m.intersect_with(&ts.targets()[r]);
        }
        for (r, t) in ts.iter().enumerate() {
            if m.is_subset(t) {
                covered[r].union_with(&m);
            }
        }
        d.push(m, containing);
    }
    d
}

pub const BRUTE_FORCE_MAX_VARS: usize = 16;
pub const BRUTE_FORCE_MAX_K: usize = 5;

/// Minimum-cardinality set basis by exhaustive search, or `None` if none has
/// at most `k_max` elements.
///
/// Candidates are the nonempty intersections of subsets of targets: in any
/// valid basis, an element `b` can be replaced by the intersection of all
/// targets containing it (it stays inside exactly the same targets and only
/// grows), and elements contained in no target can be dropped.
pub fn brute_force_set_basis(ts: &TargetSet, k_max: usize) -> Result<Option<Dictionary>> {
    let support = ts.support();
    if support.len() > BRUTE_FORCE_MAX_VARS || k_max > BRUTE_FORCE_MAX_K {
        return Err(Error::BudgetExceeded {
            what: format!("set-basis search over {} variables with k_max {k_max}", support.len()),
            limit: BRUTE_FORCE_MAX_VARS as u64,
        });
    }
    let mut cands: Vec<VarSet> = Vec::new();
    for t in ts.iter().filter(|t| !t.is_empty()) {
        if !cands.contains(t) {
            cands.push(t.clone());
        }
    }
    let mut frontier = 0;
    while frontier < cands.len() {
        let end = cands.len();
        for i in frontier..end {
            for j in 0..i {
                let c = cands[i].intersect(&cands[j]);
                if !c.is_empty() && !cands.contains(&c) {
                    cands.push(c);
                }
            }
        }
        frontier = end;
    }
    cands.sort_by(|a, b| a.size_lex_cmp(b));

    let targets: Vec<&VarSet> = ts.iter().filter(|t| !t.is_empty()).collect();
    let mut chosen = Vec::new();
    for size in 0..=k_max {
        if basis_search(&targets, &cands, &mut chosen, size) {
            return Ok(Some(Dictionary::from_metafeatures(ts.n(), chosen)));
        }
    }
    Ok(None)
}

fn basis_search(targets: &[&VarSet], cands: &[VarSet], chosen: &mut Vec<VarSet>, budget: usize) -> bool {
    let uncovered = targets.iter().find_map(|t| {
        let mut cov = VarSet::empty(t.n());
        for c in chosen.iter().filter(|c| c.is_subset(t)) {
            cov.union_with(c);
        }
        t.difference(&cov).first().map(|v| (*t, v))
    });
    let Some((t, v)) = uncovered else { return true };
    if budget == 0 {
        return false;
    }
    for c in cands.iter().filter(|c| c.contains(v) && c.is_subset(t)) {
        chosen.push(c.clone());
        if basis_search(targets, cands, chosen, budget - 1) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Number of ordered pairs `(i, j)`, `i ≠ j`, such that every target of `ts`
/// containing `i` also contains `j`.
pub fn implication_edges(ts: &TargetSet) -> usize {
    let nb: Vec<VarSet> = (0..ts.n()).map(|z| ts.neighborhood(z)).collect();
    let mut e = 0;
    for i in 0..nb.len() {
        for j in 0..nb.len() {
            if i != j && nb[i].is_subset(&nb[j]) {
                e += 1;
            }
        }
    }
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionEvent {
    pub task_index: usize,
    pub scratch: bool,
    pub dictionary_size: usize,
    pub edges: usize,
    /// `|E(G_TS)| − |D|`.
    pub phi: i64,
}

#[derive(Debug, Clone)]
pub struct SessionTranscript {
    pub n: usize,
    pub k_hint: usize,
    pub events: Vec<SessionEvent>,
    pub ts: TargetSet,
    pub dictionary: Dictionary,
    pub initial_edges: usize,
}

impl SessionTranscript {
    pub fn scratch_count(&self) -> usize {
        self.events.iter().filter(|e| e.scratch).count()
    }

    pub fn scratch_bound(&self) -> usize {
        self.n * self.n + self.k_hint
    }

    fn scratch_steps(&self) -> Vec<(i64, i64, i64)> {
        let mut prev_e = self.initial_edges as i64;
        let mut prev_d = 0i64;
        let mut out = Vec::new();
        for ev in &self.events {
            if ev.scratch {
                out.push((ev.edges as i64 - prev_e, ev.dictionary_size as i64 - prev_d, ev.phi - (prev_e - prev_d)));
            }
            prev_e = ev.edges as i64;
            prev_d = ev.dictionary_size as i64;
        }
        out
    }

    /// Scratch events that neither removed an edge nor grew the dictionary.
    pub fn stalled_events(&self) -> usize {
        self.scratch_steps().iter().filter(|(de, dd, _)| !(*de < 0 || *dd > 0)).count()
    }

    /// Scratch events at which `Φ` failed to drop strictly.
    pub fn non_decreasing_phi_events(&self) -> usize {
        self.scratch_steps().iter().filter(|(_, _, dphi)| *dphi >= 0).count()
    }
}

/// Streams targets, scratch-learning (adding to `TS` and re-solving) any
/// target not reconstructed by the current dictionary.
pub fn online_session(targets: &[Monomial], n: usize, k_hint: usize) -> Result<SessionTranscript> {
    let mut ts = TargetSet::new(n);
    let mut d = Dictionary::new(n);
    let initial_edges = n * n.saturating_sub(1);
    let mut edges = initial_edges;
    let mut events = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        if t.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: t.n() }.at_task(i));
        }
        let scratch = &covered_vars(t, &d) != t;
        if scratch {
            ts.push(t.clone())?;
            d = solve_consistency(&ts);
            edges = implication_edges(&ts);
        }
        events.push(SessionEvent {
            task_index: i,
            scratch,
            dictionary_size: d.len(),
            edges,
            phi: edges as i64 - d.len() as i64,
        });
    }
    Ok(SessionTranscript { n, k_hint, events, ts, dictionary: d, initial_edges })
}

/// Ground truth for an anchored instance: metafeature `j` owns `anchors[j]`,
/// which occurs in no other metafeature.
#[derive(Debug, Clone)]
pub struct PlantedBooleanInstance {
    pub n: usize,
    pub metafeatures: Vec<Monomial>,
    pub anchors: Vec<usize>,
    pub targets: TargetSet,
    /// Which metafeatures each target is the union of.
    pub relevant: Vec<Vec<usize>>,
}

impl PlantedBooleanInstance {
    /// Independent check of the anchor property and of each target being the
    /// union of its listed metafeatures.
    pub fn assumption_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.anchors.len() != self.metafeatures.len() {
            v.push("one anchor per metafeature required".into());
            return v;
        }
        for (j, &a) in self.anchors.iter().enumerate() {
            if !self.metafeatures[j].contains(a) {
                v.push(format!("anchor {} not in metafeature {}", a + 1, j + 1));
            }
            for (jj, m) in self.metafeatures.iter().enumerate() {
                if jj != j && m.contains(a) {
                    v.push(format!("anchor {} of metafeature {} also in metafeature {}", a + 1, j + 1, jj + 1));
                }
            }
        }
        for (r, t) in self.targets.iter().enumerate() {
            let mut u = VarSet::empty(self.n);
            for &j in &self.relevant[r] {
                u.union_with(&self.metafeatures[j]);
            }
            if &u != t {
                v.push(format!("target {} is not the union of its metafeatures", r + 1));
            }
        }
        v
    }

    /// Conditions (a)–(c) relating a solver dictionary to the truth.
    pub fn dictionary_violations(&self, d: &Dictionary) -> Vec<String> {
        let mut v = Vec::new();
        for (i, mt) in d.metafeatures().iter().enumerate() {
            let below: Vec<usize> = (0..self.metafeatures.len()).filter(|&j| self.metafeatures[j].is_subset(mt)).collect();
            if below.is_empty() {
                v.push(format!("(a) m̃{} contains no true metafeature", i + 1));
            }
            let not_too_specific = below.iter().any(|&j| {
                self.targets.iter().filter(|t| self.metafeatures[j].is_subset(t)).all(|t| mt.is_subset(t))
            });
            if !below.is_empty() && !not_too_specific {
                v.push(format!("(b) m̃{} exceeds a target containing its true metafeature", i + 1));
            }
            for (j, &a) in self.anchors.iter().enumerate() {
                if mt.contains(a) && !self.metafeatures[j].is_subset(mt) {
                    v.push(format!("(c) m̃{} holds anchor {} but not its metafeature", i + 1, a + 1));
                }
            }
        }
        v
    }
}

/// Writes the `BOOL v1` format.
pub fn write_bool(n: usize, monomials: &[Monomial]) -> String {
    let mut s = format!("BOOL v1 n={n}\n");
    for m in monomials {
        s.push_str(&m.to_index_list());
        s.push('\n');
    }
    s
}

/// Parses the `BOOL v1` format: `#` lines are comments, blank lines are empty
/// monomials.
pub fn parse_bool(text: &str) -> Result<(usize, Vec<Monomial>)> {
    let mut lines = text.lines().enumerate();
    let n = loop {
        match lines.next() {
            None => return Err(Error::parse(1, "missing BOOL v1 header")),
            Some((_, l)) if l.trim_start().starts_with('#') => continue,
            Some((i, l)) => break parse_header(l, "BOOL", &["n"]).map_err(|m| Error::parse(i + 1, m))?[0],
        }
    };
    let mut out = Vec::new();
    for (i, l) in lines {
        if l.trim_start().starts_with('#') {
            continue;
        }
        out.push(VarSet::parse_index_list(n, l).map_err(|m| Error::parse(i + 1, m))?);
    }
    Ok((n, out))
}

/// Parses `<MAGIC> v1 key=value ...`, returning the listed keys' values in order.
pub(crate) fn parse_header(line: &str, magic: &str, keys: &[&str]) -> std::result::Result<Vec<usize>, String> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(magic) || toks.next() != Some("v1") {
        return Err(format!("expected `{magic} v1` header"));
    }
    let pairs: Vec<(&str, &str)> = toks.filter_map(|t| t.split_once('=')).collect();
    keys.iter()
        .map(|k| {
            let v = pairs.iter().find(|(kk, _)| kk == k).ok_or_else(|| format!("header lacks {k}="))?.1;
            v.parse::<usize>().map_err(|_| format!("bad value for {k}: {v:?}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, idx: &[usize]) -> VarSet {
        VarSet::from_one_based(n, idx.iter().copied()).unwrap()
    }

    fn ts(n: usize, sets: &[&[usize]]) -> TargetSet {
        TargetSet::from_targets(n, sets.iter().map(|s| m(n, s)).collect()).unwrap()
    }

    #[test]
    fn bitset_basics() {
        let a = m(70, &[1, 2, 65, 70]);
        assert_eq!(a.len(), 4);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 1, 64, 69]);
        assert!(m(70, &[2, 65]).is_subset(&a));
        assert!(!m(70, &[3]).is_subset(&a));
        assert_eq!(a.complement().len(), 66);
        assert_eq!(VarSet::full(70).len(), 70);
        assert_eq!(a.to_index_list(), "1,2,65,70");
        assert_eq!(VarSet::parse_index_list(70, "1,2,65,70").unwrap(), a);
        assert!(VarSet::parse_index_list(70, "2,1").is_err());
        assert!(VarSet::parse_index_list(70, "71").is_err());
        assert_eq!(m(4, &[1, 3]).size_lex_cmp(&m(4, &[2])), Ordering::Greater);
        assert_eq!(m(4, &[1, 3]).size_lex_cmp(&m(4, &[2, 3])), Ordering::Less);
    }

    #[test]
    fn covered() {
        let d = Dictionary::new(5);
        assert!(covered_vars(&m(5, &[1, 2]), &d).is_empty());
        let d = Dictionary::from_metafeatures(5, vec![m(5, &[1, 2]), m(5, &[3, 5])]);
        assert_eq!(covered_vars(&m(5, &[1, 2, 3, 4]), &d), m(5, &[1, 2]));
        assert_eq!(covered_vars(&m(5, &[3, 5]), &d), m(5, &[3, 5]));
    }

    #[test]
    fn consistency_hand_trace() {
        let t = ts(4, &[&[1, 2, 3]]);
        assert_eq!(solve_consistency(&t).metafeatures(), &[m(4, &[1, 2, 3])]);

        let t = ts(4, &[&[1, 2], &[2, 3, 4], &[1, 2, 3, 4]]);
        let d = solve_consistency(&t);
        assert_eq!(d.metafeatures(), &[m(4, &[1, 2]), m(4, &[2, 3, 4])]);
        assert!(d.reconstructs(&t));
        assert_eq!(brute_force_set_basis(&t, 5).unwrap().unwrap().len(), 2);
    }

    #[test]
    fn empty_targets_are_vacuous() {
        let t = ts(3, &[&[], &[2]]);
        let d = solve_consistency(&t);
        assert_eq!(d.metafeatures(), &[m(3, &[2])]);
        assert!(d.reconstructs(&t));
        assert!(solve_consistency(&TargetSet::new(3)).is_empty());
    }

    #[test]
    fn brute_force_examples() {
        let d = brute_force_set_basis(&ts(2, &[&[1], &[2], &[1, 2]]), 5).unwrap().unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(brute_force_set_basis(&ts(3, &[&[1, 3]]), 5).unwrap().unwrap().len(), 1);
        // three singletons cannot be built from two sets
        assert!(brute_force_set_basis(&ts(3, &[&[1], &[2], &[3]]), 2).unwrap().is_none());
        assert!(brute_force_set_basis(&ts(20, &[&(1..=17).collect::<Vec<_>>()]), 3).is_err());
    }

    #[test]
    fn session_counts_and_potential() {
        let t = m(6, &[1, 4]);
        let tr = online_session(&vec![t; 7], 6, 1).unwrap();
        assert_eq!(tr.scratch_count(), 1);
        assert_eq!(tr.events[0].edges, 6 * 5 - (2 * 4));
        assert_eq!(tr.stalled_events(), 0);

        let targets = vec![m(4, &[1, 2]), m(4, &[2, 3, 4]), m(4, &[1, 2, 3, 4]), m(4, &[3, 4])];
        let tr = online_session(&targets, 4, 3).unwrap();
        assert_eq!(tr.events.iter().map(|e| e.scratch).collect::<Vec<_>>(), vec![true, true, false, true]);
        assert_eq!(tr.stalled_events(), 0);
        assert_eq!(tr.non_decreasing_phi_events(), 0);
    }

    #[test]
    fn edges_start_complete() {
        assert_eq!(implication_edges(&TargetSet::new(5)), 20);
        assert_eq!(implication_edges(&ts(3, &[&[1]])), 6 - 2);
    }

    #[test]
    fn bool_format_round_trip() {
        let ms = vec![m(5, &[1, 2, 5]), m(5, &[]), m(5, &[3])];
        let text = write_bool(5, &ms);
        assert_eq!(text, "BOOL v1 n=5\n1,2,5\n\n3\n");
        let (n, back) = parse_bool(&format!("# corpus\n{text}# trailing note\n")).unwrap();
        assert_eq!(n, 5);
        assert_eq!(back, ms);
        assert!(matches!(parse_bool("BOOL v2 n=5\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_bool("BOOL v1 n=3\n1,4\n"), Err(Error::Parse { line: 2, .. })));
    }
}
