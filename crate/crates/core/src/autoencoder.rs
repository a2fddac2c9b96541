//! Boolean superimposition autoencoders: the minimum dictionary under anchor
//! variables, and the LP-plus-rounding sparse dictionary under anchor sets.

use rand::Rng;

use crate::boolean::{covered_vars, solve_consistency, Dictionary, Monomial, TargetSet, VarSet};
use crate::conjunction::anchor_patterns;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, Cmp, LinearProgram, LpSolution, LpStatus, SimplexOptions};
use crate::sampling::{derive_seed, rng_from};

/// Planted metafeatures with their anchor sets `y_j` and each target's
/// relevant set `R_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSetTruth {
    pub metafeatures: Vec<Monomial>,
    pub anchors: Vec<VarSet>,
    pub relevant: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSetInstance {
    pub ts: TargetSet,
    pub c: usize,
    pub k: usize,
    pub truth: Option<AnchorSetTruth>,
}

impl AnchorSetInstance {
    /// Independent check of the c-anchor-set assumption at sparsity `k`:
    /// each target is the union of at most `k` relevant metafeatures, and
    /// each anchor `y_j ⪯ m_j` of weight `1..=c` forces `m_j` into `R_r`
    /// whenever `y_j ⪯ T_r`.
    pub fn anchor_set_violations(&self) -> Vec<String> {
        let Some(t) = &self.truth else {
            return vec!["no ground truth".into()];
        };
        let mut v = Vec::new();
        if t.anchors.len() != t.metafeatures.len() {
            v.push("one anchor set per metafeature required".into());
            return v;
        }
        if t.relevant.len() != self.ts.len() {
            v.push("one relevant set per target required".into());
            return v;
        }
        for (j, (y, m)) in t.anchors.iter().zip(&t.metafeatures).enumerate() {
            if y.is_empty() || y.len() > self.c {
                v.push(format!("anchor set of metafeature {} has weight {}", j + 1, y.len()));
            }
            if !y.is_subset(m) {
                v.push(format!("anchor set of metafeature {} is not inside it", j + 1));
            }
        }
        for (r, tr) in self.ts.iter().enumerate() {
            let rel = &t.relevant[r];
            if rel.len() > self.k {
                v.push(format!("target {} has {} > k relevant metafeatures", r + 1, rel.len()));
            }
            let mut u = VarSet::empty(self.ts.n());
            for &j in rel {
                u.union_with(&t.metafeatures[j]);
            }
            if &u != tr {
                v.push(format!("target {} is not the union of its relevant metafeatures", r + 1));
            }
            for (j, y) in t.anchors.iter().enumerate() {
                if y.is_subset(tr) && !rel.contains(&j) {
                    v.push(format!("anchor set of metafeature {} lies in target {} but is not relevant", j + 1, r + 1));
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub anchor: VarSet,
    pub metafeature: Monomial,
}

/// `m̃_y` = intersection of the targets containing `y`, for every `y` of
/// weight `1..=c` inside some target; equal variable sets are merged,
/// keeping the first `y` in size-then-lexicographic order.
pub fn generate_candidates(ts: &TargetSet, c: usize, cap: usize) -> Result<Vec<Candidate>> {
    if c == 0 || c > 3 {
        return Err(Error::InvalidArgument(format!("anchor weight c={c} outside 1..=3")));
    }
    let n = ts.n();
    let patterns: usize = (1..=c).map(|s| (0..s).fold(1usize, |a, i| a * (n - i) / (i + 1))).sum();
    if patterns > cap {
        return Err(Error::BudgetExceeded { what: "anchor patterns".into(), limit: cap as u64 });
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for y in anchor_patterns(n, c) {
        if let Some(m) = ts.closure(&y) {
            if seen.insert(m.clone()) {
                out.push(Candidate { anchor: y, metafeature: m });
            }
        }
    }
    Ok(out)
}

/// The covering LP over the candidates.
#[derive(Debug, Clone)]
pub struct SparseLpInstance {
    pub candidates: Vec<Candidate>,
    pub k: usize,
    pub lp: LinearProgram,
    /// `(r, i)` for each cover row, in row order after the box rows.
    pub cover_rows: Vec<(usize, usize)>,
    pub n_targets: usize,
}

impl SparseLpInstance {
    pub fn num_box_rows(&self) -> usize {
        self.candidates.len()
    }
}

/// Rows: `Z_y ≤ 1` per candidate; `Σ_{e_i ⪯ m̃_y ⪯ T_r} Z_y ≥ 1` per set bit
/// of each target; `Σ_{m̃_y ⪯ T_r} Z_y ≤ k` per target.
pub fn build_lp(candidates: &[Candidate], ts: &TargetSet, k: usize) -> Result<SparseLpInstance> {
    let nv = candidates.len();
    if nv == 0 && ts.iter().any(|t| !t.is_empty()) {
        return Err(Error::Infeasible("no candidates for a nonempty target".into()));
    }
    let mut lp = LinearProgram::new(vec![1.0; nv.max(1)]);
    for j in 0..nv {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        lp.add(row, Cmp::Le, 1.0);
    }
    let inside: Vec<Vec<usize>> =
        ts.iter().map(|t| (0..nv).filter(|&j| candidates[j].metafeature.is_subset(t)).collect()).collect();
    let mut cover_rows = Vec::new();
    for (r, t) in ts.iter().enumerate() {
        for i in t.iter() {
            let mut row = vec![0.0; nv];
            let mut any = false;
            for &j in &inside[r] {
                if candidates[j].metafeature.contains(i) {
                    row[j] = 1.0;
                    any = true;
                }
            }
            if !any {
                return Err(Error::Infeasible(format!("variable {} of target {} is covered by no candidate", i + 1, r + 1)));
            }
            lp.add(row, Cmp::Ge, 1.0);
            cover_rows.push((r, i));
        }
    }
    for ins in &inside {
        let mut row = vec![0.0; nv.max(1)];
        ins.iter().for_each(|&j| row[j] = 1.0);
        lp.add(row, Cmp::Le, k as f64);
    }
    Ok(SparseLpInstance { candidates: candidates.to_vec(), k, lp, cover_rows, n_targets: ts.len() })
}

/// Indicator of the candidates equal to `m̃_{y_j}` for the planted anchors;
/// metafeatures used by no target are skipped.
pub fn ground_truth_point(inst: &SparseLpInstance, ts: &TargetSet, truth: &AnchorSetTruth) -> Result<Vec<f64>> {
    let mut z = vec![0.0; inst.candidates.len()];
    for (j, y) in truth.anchors.iter().enumerate() {
        let Some(m) = ts.closure(y) else { continue };
        let idx = inst
            .candidates
            .iter()
            .position(|c| c.metafeature == m)
            .ok_or_else(|| Error::AssumptionViolated(format!("no candidate matches metafeature {}", j + 1)))?;
        z[idx] = 1.0;
    }
    Ok(z)
}

pub fn solve_sparse_lp(inst: &SparseLpInstance, opts: &SimplexOptions) -> Result<LpSolution> {
    if inst.candidates.is_empty() {
        return Ok(LpSolution { values: Vec::new(), objective: 0.0, status: LpStatus::Optimal, pivots: 0 });
    }
    solve_lp(&inst.lp, opts)
}

/// `ln(n²|TS|)`.
pub fn rounding_log_factor(n: usize, n_targets: usize) -> f64 {
    ((n * n * n_targets.max(1)) as f64).ln()
}

/// `2·max(k, 3)·ln(n²|TS|)`.
pub fn sparsity_bound(k: usize, n: usize, n_targets: usize) -> f64 {
    2.0 * k.max(3) as f64 * rounding_log_factor(n, n_targets)
}

/// `4·|M|·ln(n²|TS|)`.
pub fn dictionary_size_bound(planted: usize, n: usize, n_targets: usize) -> f64 {
    4.0 * planted as f64 * rounding_log_factor(n, n_targets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounding {
    /// Candidate indices kept.
    pub selected: Vec<usize>,
    pub dictionary: Dictionary,
    /// Per target, the dictionary positions contained in it.
    pub relevant: Vec<Vec<usize>>,
    /// Failed attempts before the accepted one.
    pub retries: u32,
    /// Total (r, i) coverage misses over all attempts.
    pub coverage_misses: u64,
}

/// Keeps each candidate with probability `min(1, Z_y·ln(n²|TS|))`, retrying
/// with fresh randomness until every target is exactly covered and every
/// `|R̃_r| ≤ 2·max(k,3)·ln(n²|TS|)`.
pub fn round_solution(
    inst: &SparseLpInstance,
    ts: &TargetSet,
    sol: &LpSolution,
    seed: u64,
    max_retries: u32,
) -> Result<Rounding> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::Precondition(format!("rounding needs an optimal solution, got {}", sol.status)));
    }
    let n = ts.n();
    let factor = rounding_log_factor(n, ts.len());
    let limit = sparsity_bound(inst.k, n, ts.len());
    let mut coverage_misses = 0u64;
    let mut last_reason = String::new();
    for attempt in 0..=max_retries {
        let mut rng = rng_from(derive_seed(seed, &[attempt as u64]));
        let selected: Vec<usize> = (0..inst.candidates.len())
            .filter(|&j| {
                let p = (sol.values[j].max(0.0) * factor).min(1.0);
                rng.random::<f64>() < p
            })
            .collect();
        let mut d = Dictionary::new(n);
        for &j in &selected {
            d.push(inst.candidates[j].metafeature.clone(), vec![j]);
        }
        let relevant: Vec<Vec<usize>> = ts.iter().map(|t| d.contained_in(t)).collect();
        let mut misses = 0u64;
        let mut failed = None;
        for (r, t) in ts.iter().enumerate() {
            let miss = t.difference(&covered_vars(t, &d)).len() as u64;
            if miss > 0 {
                misses += miss;
                failed.get_or_insert(format!("target {} not covered", r + 1));
            } else if relevant[r].len() as f64 > limit {
                failed.get_or_insert(format!("target {} has {} > {limit:.2} metafeatures", r + 1, relevant[r].len()));
            }
        }
        coverage_misses += misses;
        match failed {
            None => return Ok(Rounding { selected, dictionary: d, relevant, retries: attempt, coverage_misses }),
            Some(reason) => last_reason = reason,
        }
    }
    Err(Error::RetriesExhausted { retries: max_retries, reason: last_reason })
}

#[derive(Debug, Clone)]
pub struct SparseAutoencoding {
    pub lp_instance: SparseLpInstance,
    pub solution: LpSolution,
    pub rounding: Rounding,
}

/// Candidates, LP, rounding.
pub fn sparse_autoencode(
    ts: &TargetSet,
    c: usize,
    k: usize,
    seed: u64,
    max_retries: u32,
    opts: &SimplexOptions,
) -> Result<SparseAutoencoding> {
    let cands = generate_candidates(ts, c, 2_000_000)?;
    let inst = build_lp(&cands, ts, k)?;
    let solution = solve_sparse_lp(&inst, opts)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("covering LP has no feasible point".into())),
        LpStatus::BudgetExceeded => return Err(Error::BudgetExceeded { what: "simplex pivots".into(), limit: opts.max_pivots }),
        LpStatus::Unbounded => unreachable!("the covering LP is bounded below by zero"),
    }
    let rounding = round_solution(&inst, ts, &solution, seed, max_retries)?;
    Ok(SparseAutoencoding { lp_instance: inst, solution, rounding })
}

/// Minimum dictionary under the anchor-variable assumption, with each
/// image's decomposition into the dictionary elements it contains.
#[derive(Debug, Clone)]
pub struct Autoencoding {
    pub dictionary: Dictionary,
    pub decompositions: Vec<Vec<usize>>,
    pub reconstruction_failures: Vec<usize>,
}

pub fn autoencode_min(ts: &TargetSet) -> Autoencoding {
    let dictionary = solve_consistency(ts);
    let decompositions = ts.iter().map(|t| dictionary.contained_in(t)).collect();
    let reconstruction_failures = dictionary.reconstruction_failures(ts);
    Autoencoding { dictionary, decompositions, reconstruction_failures }
}

/// `DECOMP v1`: one line per image, `<image> : <dictionary indices>`, all 1-based.
pub fn write_decompositions(dictionary_size: usize, decompositions: &[Vec<usize>]) -> String {
    let mut s = format!("DECOMP v1 images={} dictionary={dictionary_size}\n", decompositions.len());
    for (i, d) in decompositions.iter().enumerate() {
        let idx = d.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(",");
        s.push_str(&format!("{} : {idx}\n", i + 1));
    }
    s
}

pub fn parse_decompositions(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing DECOMP v1 header"))?;
    let h = crate::boolean::parse_header(header, "DECOMP", &["images", "dictionary"]).map_err(|m| Error::parse(1, m))?;
    let mut out = Vec::with_capacity(h[0]);
    for (i, l) in lines {
        let (img, idx) = l.split_once(':').ok_or_else(|| Error::parse(i + 1, "expected `<image> : <indices>`"))?;
        if img.trim().parse::<usize>().ok() != Some(out.len() + 1) {
            return Err(Error::parse(i + 1, "images must be numbered consecutively from 1"));
        }
        let idx = idx.trim();
        let row = if idx.is_empty() {
            Vec::new()
        } else {
            idx.split(',')
                .map(|t| match t.trim().parse::<usize>() {
                    Ok(j) if j >= 1 && j <= h[1] => Ok(j - 1),
                    _ => Err(Error::parse(i + 1, format!("bad dictionary index {t:?}"))),
                })
                .collect::<Result<Vec<_>>>()?
        };
        out.push(row);
    }
    if out.len() != h[0] {
        return Err(Error::parse(1, format!("header declares {} images, found {}", h[0], out.len())));
    }
    Ok(out)
}

/// `IMG v1`: blocks of `h` rows of `w` characters from `{0,1}`, separated by
/// blank lines; bit `i` in row-major order is variable `i + 1`.
pub fn write_images(w: usize, h: usize, images: &[VarSet]) -> String {
    let mut s = format!("IMG v1 w={w} h={h}\n");
    for (b, img) in images.iter().enumerate() {
        if b > 0 {
            s.push('\n');
        }
        for row in 0..h {
            for col in 0..w {
                s.push(if img.contains(row * w + col) { '1' } else { '0' });
            }
            s.push('\n');
        }
    }
    s
}

pub fn parse_images(text: &str) -> Result<(usize, usize, Vec<VarSet>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing IMG v1 header"))?;
    let hv = crate::boolean::parse_header(header, "IMG", &["w", "h"]).map_err(|m| Error::parse(1, m))?;
    let (w, h) = (hv[0], hv[1]);
    if w == 0 || h == 0 {
        return Err(Error::parse(1, "image dimensions must be positive"));
    }
    let mut images = Vec::new();
    let mut cur: Vec<(usize, &str)> = Vec::new();
    let mut flush = |cur: &mut Vec<(usize, &str)>| -> Result<()> {
        if cur.is_empty() {
            return Ok(());
        }
        if cur.len() != h {
            return Err(Error::parse(cur[0].0 + 1, format!("image block has {} rows, expected {h}", cur.len())));
        }
        let mut img = VarSet::empty(w * h);
        for (row, (ln, l)) in cur.iter().enumerate() {
            let l = l.trim_end();
            if l.chars().count() != w {
                return Err(Error::parse(ln + 1, format!("row has {} characters, expected {w}", l.chars().count())));
            }
            for (col, ch) in l.chars().enumerate() {
                match ch {
                    '1' => img.insert(row * w + col),
                    '0' => {}
                    _ => return Err(Error::parse(ln + 1, format!("unexpected character {ch:?}"))),
                }
            }
        }
        images.push(img);
        cur.clear();
        Ok(())
    };
    for (i, l) in lines {
        if l.trim_start().starts_with('#') {
            continue;
        }
        if l.trim().is_empty() {
            flush(&mut cur)?;
        } else {
            cur.push((i, l));
        }
    }
    flush(&mut cur)?;
    Ok((w, h, images))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: usize, idx: &[usize]) -> Monomial {
        VarSet::from_one_based(n, idx.iter().copied()).unwrap()
    }

    fn ts(n: usize, sets: &[&[usize]]) -> TargetSet {
        TargetSet::from_targets(n, sets.iter().map(|s| m(n, s)).collect()).unwrap()
    }

    #[test]
    fn candidates_by_hand() {
        let t = ts(3, &[&[1, 2], &[2, 3]]);
        let c = generate_candidates(&t, 1, 1000).unwrap();
        let ms: Vec<Monomial> = c.iter().map(|c| c.metafeature.clone()).collect();
        assert_eq!(ms, vec![m(3, &[1, 2]), m(3, &[2]), m(3, &[2, 3])]);
        let single = generate_candidates(&ts(4, &[&[1, 3, 4]]), 1, 1000).unwrap();
        assert_eq!(single.len(), 1);
        assert!(generate_candidates(&t, 4, 1000).is_err());
        assert!(generate_candidates(&t, 2, 3).is_err());
    }

    #[test]
    fn single_target_lp() {
        let t = ts(4, &[&[1, 3, 4]]);
        let c = generate_candidates(&t, 1, 1000).unwrap();
        let inst = build_lp(&c, &t, 1).unwrap();
        assert_eq!(inst.cover_rows.len(), 3);
        let s = solve_sparse_lp(&inst, &SimplexOptions::default()).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
        let r = round_solution(&inst, &t, &s, 1, 16).unwrap();
        assert_eq!(r.selected, vec![0]);
        assert_eq!(r.relevant, vec![vec![0]]);
    }

    #[test]
    fn tight_sparsity_is_infeasible() {
        // Three disjoint anchored pieces force three metafeatures into the last target.
        let t = ts(3, &[&[1], &[2], &[3], &[1, 2, 3]]);
        let c = generate_candidates(&t, 1, 1000).unwrap();
        let inst = build_lp(&c, &t, 2).unwrap();
        assert_eq!(solve_sparse_lp(&inst, &SimplexOptions::default()).unwrap().status, LpStatus::Infeasible);
        assert!(build_lp(&[], &t, 2).is_err());
    }

    #[test]
    fn uncoverable_bit_is_reported() {
        let t = ts(3, &[&[1, 2]]);
        let c = vec![Candidate { anchor: m(3, &[1]), metafeature: m(3, &[1]) }];
        match build_lp(&c, &t, 2) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("variable 2 of target 1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_ones_rounds_to_everything() {
        let t = ts(4, &[&[1, 2], &[3, 4], &[1, 2, 3, 4]]);
        let c = generate_candidates(&t, 1, 1000).unwrap();
        let inst = build_lp(&c, &t, 3).unwrap();
        let sol = LpSolution { values: vec![1.0; c.len()], objective: c.len() as f64, status: LpStatus::Optimal, pivots: 0 };
        let r = round_solution(&inst, &t, &sol, 3, 0).unwrap();
        assert_eq!(r.selected.len(), c.len());
        assert!(r.dictionary.reconstructs(&t));
    }

    #[test]
    fn anchor_set_checker() {
        let n = 6;
        let truth = AnchorSetTruth {
            metafeatures: vec![m(n, &[1, 2]), m(n, &[2, 3, 4]), m(n, &[5, 6])],
            anchors: vec![m(n, &[1]), m(n, &[3, 4]), m(n, &[6])],
            relevant: vec![vec![0, 1], vec![1, 2], vec![0, 2]],
        };
        let targets = ts(n, &[&[1, 2, 3, 4], &[2, 3, 4, 5, 6], &[1, 2, 5, 6]]);
        let inst = AnchorSetInstance { ts: targets.clone(), c: 2, k: 2, truth: Some(truth.clone()) };
        assert!(inst.anchor_set_violations().is_empty(), "{:?}", inst.anchor_set_violations());
        let lp = build_lp(&generate_candidates(&targets, 2, 1000).unwrap(), &targets, 2).unwrap();
        let z = ground_truth_point(&lp, &targets, &truth).unwrap();
        assert!(lp.lp.violations(&z, 1e-12).is_empty());
        assert_eq!(z.iter().sum::<f64>(), 3.0);
        let s = solve_sparse_lp(&lp, &SimplexOptions::default()).unwrap();
        assert!(s.objective <= 3.0 + 1e-9);

        let mut bad = inst.clone();
        bad.c = 1;
        assert!(!bad.anchor_set_violations().is_empty());
        let mut bad = inst;
        bad.truth.as_mut().unwrap().relevant[2] = vec![0, 1, 2];
        assert!(!bad.anchor_set_violations().is_empty());
    }

    #[test]
    fn minimum_autoencoder() {
        let t = ts(4, &[&[1, 2], &[2, 3, 4], &[1, 2, 3, 4]]);
        let a = autoencode_min(&t);
        assert_eq!(a.dictionary.len(), 2);
        assert_eq!(a.decompositions, vec![vec![0], vec![1], vec![0, 1]]);
        assert!(a.reconstruction_failures.is_empty());
        let one = autoencode_min(&ts(4, &[&[2, 4]]));
        assert_eq!(one.dictionary.metafeatures(), &[m(4, &[2, 4])]);
        let text = write_decompositions(a.dictionary.len(), &a.decompositions);
        assert_eq!(text.lines().nth(3), Some("3 : 1,2"));
        assert_eq!(parse_decompositions(&text).unwrap(), a.decompositions);
    }

    #[test]
    fn image_round_trip() {
        let imgs = vec![m(6, &[1, 5]), m(6, &[]), m(6, &[1, 2, 3, 4, 5, 6])];
        let text = write_images(3, 2, &imgs);
        assert!(text.starts_with("IMG v1 w=3 h=2\n100\n010\n\n000\n"));
        assert_eq!(parse_images(&text).unwrap(), (3, 2, imgs));
        assert!(parse_images("IMG v1 w=2 h=1\n101\n").is_err());
        assert!(parse_images("IMG v1 w=2 h=2\n10\n").is_err());
    }
}
