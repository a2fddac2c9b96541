//! Single-task halfspace learners: from scratch in the ambient space, inside a
//! learned subspace, and τ-sparsely over second-level directions.
//!
//! The base learner warm-starts from the label-weighted sample mean and then
//! runs the reflection variant of the perceptron (`w ← w − 2(w·x̂)x̂` on every
//! mistake), which keeps `w` on the unit sphere. Under any rotationally
//! symmetric distribution its angle to the target shrinks like `d/N`, against
//! `sqrt(d/N)` for the mean alone.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, OrthonormalBasis, UnitVector};
use crate::sampling::{halfspace_label, ExampleSource, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceHypothesis {
    /// In ambient coordinates for the scratch learner, in subspace coordinates otherwise.
    pub direction: UnitVector,
    pub achieved_error_estimate: f64,
    pub samples_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Hard cap on oracle draws for one call.
    pub sample_cap: u64,
    /// Hard cap on the number of subsets `learn_tau_sparse` may try.
    pub subset_cap: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { sample_cap: 200_000_000, subset_cap: 100_000 }
    }
}

/// Warm-up length of the base learner, in multiples of the dimension.
const WARMUP_FACTOR: usize = 10;

/// Online learner over `d`-dimensional features.
#[derive(Debug, Clone)]
struct Reflector {
    w: Vec<f64>,
    mean: Vec<f64>,
    seen: usize,
    warmup: usize,
}

impl Reflector {
    fn new(d: usize) -> Self {
        Reflector { w: vec![0.0; d], mean: vec![0.0; d], seen: 0, warmup: WARMUP_FACTOR * d }
    }

    fn observe(&mut self, z: &[f64], y: Label) {
        self.seen += 1;
        if self.seen <= self.warmup {
            let s = y as f64;
            self.mean.iter_mut().zip(z).for_each(|(m, zi)| *m += s * zi);
            if self.seen == self.warmup {
                self.w.clone_from(&self.mean);
                normalize_or_axis(&mut self.w);
            }
            return;
        }
        let zn2 = dot(z, z);
        if zn2 == 0.0 || halfspace_label(&self.w, z) == y {
            return;
        }
        let c = 2.0 * dot(&self.w, z) / zn2;
        self.w.iter_mut().zip(z).for_each(|(wi, zi)| *wi -= c * zi);
        // Reflections preserve the norm up to rounding; renormalize sparingly.
        if self.seen.is_multiple_of(1024) {
            normalize_or_axis(&mut self.w);
        }
    }

    fn direction(&self) -> Vec<f64> {
        let mut w = if self.seen < self.warmup { self.mean.clone() } else { self.w.clone() };
        normalize_or_axis(&mut w);
        w
    }
}

fn normalize_or_axis(w: &mut [f64]) {
    let n = norm(w);
    if n > 0.0 && n.is_finite() {
        w.iter_mut().for_each(|x| *x /= n);
    } else {
        w.iter_mut().for_each(|x| *x = 0.0);
        w[0] = 1.0;
    }
}

/// `ceil(32/ε · ln(4/δ))`.
pub fn holdout_size(eps: f64, delta: f64) -> u64 {
    (32.0 / eps * (4.0 / delta).ln()).ceil() as u64
}

/// Training size for a `d`-dimensional in-subspace fit at error `eps`.
pub fn subspace_training_size(d: usize, eps: f64) -> u64 {
    ((14.0 * d as f64 / eps).ceil() as u64).max(400 * d as u64)
}

fn check_eps(name: &str, eps: f64, hi: f64) -> Result<()> {
    if !(eps > 0.0 && eps < hi) {
        return Err(Error::InvalidArgument(format!("{name} {eps} outside (0, {hi})")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

struct Budget {
    start: u64,
    cap: u64,
}

impl Budget {
    fn new<S: ExampleSource + ?Sized>(src: &S, cap: u64) -> Self {
        Budget { start: src.draws(), cap }
    }

    fn reserve<S: ExampleSource + ?Sized>(&self, src: &S, more: u64, what: &str) -> Result<()> {
        if src.draws() - self.start + more > self.cap {
            return Err(Error::BudgetExceeded { what: what.to_string(), limit: self.cap });
        }
        Ok(())
    }

    fn used<S: ExampleSource + ?Sized>(&self, src: &S) -> u64 {
        src.draws() - self.start
    }
}

/// Fraction of `count` fresh draws misclassified by `sign(h·proj(x))`.
fn holdout_error<S: ExampleSource + ?Sized>(src: &mut S, count: u64, h: &[f64], basis: Option<&OrthonormalBasis>) -> f64 {
    let mut x = vec![0.0; src.dim()];
    let mut z = vec![0.0; h.len()];
    let mut mistakes = 0u64;
    for _ in 0..count {
        let y = src.draw(&mut x);
        let pred = match basis {
            Some(b) => {
                b.project_into(&x, &mut z);
                halfspace_label(h, &z)
            }
            None => halfspace_label(h, &x),
        };
        mistakes += (pred != y) as u64;
    }
    mistakes as f64 / count as f64
}

/// Normalized label-weighted mean of `count` draws. Under a rotationally
/// symmetric distribution its expectation is a positive multiple of the target.
pub fn averaging_estimate<S: ExampleSource + ?Sized>(src: &mut S, count: u64) -> Result<UnitVector> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let mut x = vec![0.0; src.dim()];
    let mut sum = vec![0.0; src.dim()];
    for _ in 0..count {
        let y = src.draw(&mut x) as f64;
        sum.iter_mut().zip(&x).for_each(|(s, xi)| *s += y * xi);
    }
    normalize_or_axis(&mut sum);
    UnitVector::from_unit(sum)
}

/// Trains on exactly `count` draws, continuing from `learner`.
fn train<S: ExampleSource + ?Sized>(
    src: &mut S,
    learner: &mut Reflector,
    count: u64,
    basis: Option<&OrthonormalBasis>,
) {
    let mut x = vec![0.0; src.dim()];
    let mut z = vec![0.0; learner.w.len()];
    for _ in 0..count {
        let y = src.draw(&mut x);
        match basis {
            Some(b) => {
                b.project_into(&x, &mut z);
                learner.observe(&z, y);
            }
            None => learner.observe(&x, y),
        }
    }
}

/// Learns a direction of error at most `eps_acc` in the ambient space. The
/// training size starts at `8n/ε_acc` and doubles until a fresh holdout of
/// size [`holdout_size`] confirms error `≤ ε_acc/2`.
pub fn learn_from_scratch<S: ExampleSource + ?Sized>(
    src: &mut S,
    eps_acc: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<HalfspaceHypothesis> {
    check_eps("eps_acc", eps_acc, 0.25)?;
    check_delta(delta)?;
    if !src.distribution().is_rotationally_symmetric() {
        return Err(Error::Precondition("scratch learner needs a rotationally symmetric distribution".into()));
    }
    let n = src.dim();
    let budget = Budget::new(src, cfg.sample_cap);
    let holdout = holdout_size(eps_acc, delta);
    let mut learner = Reflector::new(n);
    let mut chunk = ((8.0 * n as f64 / eps_acc).ceil() as u64).max((WARMUP_FACTOR * n) as u64);
    loop {
        budget.reserve(src, chunk + holdout, "scratch halfspace samples")?;
        train(src, &mut learner, chunk, None);
        let w = learner.direction();
        let err = holdout_error(src, holdout, &w, None);
        if err <= eps_acc / 2.0 {
            return Ok(HalfspaceHypothesis {
                direction: UnitVector::from_unit(w)?,
                achieved_error_estimate: err,
                samples_used: budget.used(src),
            });
        }
        // Continuing the same learner doubles the total training size.
        chunk = learner.seen as u64;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubspaceOutcome {
    Found(HalfspaceHypothesis),
    NoGoodSeparator { holdout_error: f64, samples_used: u64 },
}

impl SubspaceOutcome {
    pub fn samples_used(&self) -> u64 {
        match self {
            SubspaceOutcome::Found(h) => h.samples_used,
            SubspaceOutcome::NoGoodSeparator { samples_used, .. } => *samples_used,
        }
    }
}

/// Learns over the coordinates `(w̃₁·x, …, w̃_k̃·x)` and accepts only if a
/// fresh holdout shows error `≤ ε/2`.
pub fn learn_in_subspace<S: ExampleSource + ?Sized>(
    w: &OrthonormalBasis,
    src: &mut S,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<SubspaceOutcome> {
    check_eps("eps", eps, 0.5)?;
    check_delta(delta)?;
    if w.is_empty() {
        return Err(Error::EmptyBasis);
    }
    if w.dim() != src.dim() {
        return Err(Error::DimensionMismatch { expected: src.dim(), found: w.dim() });
    }
    let budget = Budget::new(src, cfg.sample_cap);
    let n_train = subspace_training_size(w.rank(), eps);
    let holdout = holdout_size(eps, delta);
    budget.reserve(src, n_train + holdout, "subspace halfspace samples")?;
    let mut learner = Reflector::new(w.rank());
    train(src, &mut learner, n_train, Some(w));
    let h = learner.direction();
    let err = holdout_error(src, holdout, &h, Some(w));
    let samples_used = budget.used(src);
    if err <= eps / 2.0 {
        Ok(SubspaceOutcome::Found(HalfspaceHypothesis {
            direction: UnitVector::from_unit(h)?,
            achieved_error_estimate: err,
            samples_used,
        }))
    } else {
        Ok(SubspaceOutcome::NoGoodSeparator { holdout_error: err, samples_used })
    }
}

/// Least-squares coefficients `c` with `Σ c_j rows_j ≈ target`.
pub fn coefficients_over(rows: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let n = target.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: r.len() });
    }
    let a = DMatrix::from_fn(n, rows.len(), |i, j| rows[j][i]);
    let b = DVector::from_column_slice(target);
    let c = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    Ok(c.iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SparseOutcome {
    Found {
        subset: Vec<usize>,
        /// Length `|U_rows|`, zero outside `subset`.
        coefficients: Vec<f64>,
        holdout_error: f64,
        samples_used: u64,
    },
    NoSparseSeparator { best_holdout_error: f64, samples_used: u64 },
}

impl SparseOutcome {
    pub fn samples_used(&self) -> u64 {
        match self {
            SparseOutcome::Found { samples_used, .. } | SparseOutcome::NoSparseSeparator { samples_used, .. } => {
                *samples_used
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

/// Subsets of `0..n` of each size `1..=max_size`, smaller sizes first and
/// lexicographic within a size.
pub fn subsets_up_to(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - left {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=max_size.min(n) {
        rec(0, n, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// Tries every subset of at most `tau` second-level directions `ũ_j·W̃`
/// (rows of `u_rows` are coefficients over `w_rows`). One training sample and
/// one holdout are drawn up front and shared by all subsets; the first subset
/// whose fit has holdout error `≤ ε/2` wins.
pub fn learn_tau_sparse<S: ExampleSource + ?Sized>(
    u_rows: &[Vec<f64>],
    w_rows: &[UnitVector],
    tau: usize,
    src: &mut S,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<SparseOutcome> {
    check_eps("eps", eps, 0.5)?;
    check_delta(delta)?;
    if tau == 0 || tau > u_rows.len() {
        return Err(Error::InvalidArgument(format!("tau {tau} must lie in 1..={}", u_rows.len())));
    }
    let n = src.dim();
    let directions = u_rows
        .iter()
        .map(|u| {
            if u.len() != w_rows.len() {
                return Err(Error::DimensionMismatch { expected: w_rows.len(), found: u.len() });
            }
            let mut d = vec![0.0; n];
            for (c, w) in u.iter().zip(w_rows) {
                if w.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: w.dim() });
                }
                d.iter_mut().zip(w.coords()).for_each(|(di, wi)| *di += c * wi);
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    let tried: u64 = (1..=tau).map(|s| binomial(u_rows.len(), s)).sum();
    if tried > cfg.subset_cap {
        return Err(Error::BudgetExceeded { what: "sparse subsets".into(), limit: cfg.subset_cap });
    }

    let budget = Budget::new(src, cfg.sample_cap);
    let n_train = subspace_training_size(tau, eps);
    let holdout = holdout_size(eps, delta);
    budget.reserve(src, n_train + holdout, "sparse halfspace samples")?;
    let mut draw_block = |count: u64| {
        let mut xs = vec![0.0; count as usize * n];
        let mut ys = Vec::with_capacity(count as usize);
        for x in xs.chunks_exact_mut(n) {
            ys.push(src.draw(x));
        }
        (xs, ys)
    };
    let (train_x, train_y) = draw_block(n_train);
    let (hold_x, hold_y) = draw_block(holdout);
    let samples_used = budget.used(src);

    let mut best = f64::INFINITY;
    for subset in subsets_up_to(u_rows.len(), tau) {
        let rows: Vec<&Vec<f64>> = subset.iter().map(|&j| &directions[j]).collect();
        let basis = OrthonormalBasis::span_of(n, &rows)?;
        if basis.is_empty() {
            continue;
        }
        let mut z = vec![0.0; basis.rank()];
        let mut learner = Reflector::new(basis.rank());
        for (x, &y) in train_x.chunks_exact(n).zip(&train_y) {
            basis.project_into(x, &mut z);
            learner.observe(&z, y);
        }
        let h = learner.direction();
        let mistakes = hold_x
            .chunks_exact(n)
            .zip(&hold_y)
            .filter(|(x, &y)| {
                basis.project_into(x, &mut z);
                halfspace_label(&h, &z) != y
            })
            .count();
        let err = mistakes as f64 / holdout as f64;
        best = best.min(err);
        if err <= eps / 2.0 {
            let ambient = basis.lift(&h);
            let sub_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
            let local = coefficients_over(&sub_rows, &ambient)?;
            let mut coefficients = vec![0.0; u_rows.len()];
            for (&j, c) in subset.iter().zip(local) {
                coefficients[j] = c;
            }
            return Ok(SparseOutcome::Found { subset, coefficients, holdout_error: err, samples_used });
        }
    }
    Ok(SparseOutcome::NoSparseSeparator { best_holdout_error: best, samples_used })
}
