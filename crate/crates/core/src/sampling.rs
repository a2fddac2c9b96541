//! Isotropic samplers, labeled-example oracles, Monte-Carlo error estimates,
//! and the equivalence / membership query oracles.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rand_distr::StandardNormal;

use crate::boolean::{Monomial, VarSet};
use crate::error::{Error, Result};
use crate::geometry::{dot, UnitVector};
use crate::polynomial::MultilinearPolynomial;

pub type SeededRng = Xoshiro256PlusPlus;

/// `+1` or `-1`.
pub type Label = i8;

pub fn rng_from(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Deterministically mixes a base seed with a path of tags (trial, task, role).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix(base ^ 0x6a09_e667_f3bc_c909);
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Gaussian { dim: usize },
    /// Uniform on the ball of radius `sqrt(dim + 2)`, which has identity covariance.
    UniformBall { dim: usize },
    ProductBernoulli { p: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Real(Vec<f64>),
    Bits(VarSet),
}

impl Distribution {
    pub fn gaussian(dim: usize) -> Self {
        Distribution::Gaussian { dim }
    }

    pub fn uniform_ball(dim: usize) -> Self {
        Distribution::UniformBall { dim }
    }

    pub fn product_bernoulli(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::InvalidArgument(format!("bernoulli parameter {bad} outside (0,1)")));
        }
        if p.is_empty() {
            return Err(Error::InvalidArgument("empty product distribution".into()));
        }
        Ok(Distribution::ProductBernoulli { p })
    }

    pub fn uniform_cube(n: usize) -> Self {
        Distribution::ProductBernoulli { p: vec![0.5; n] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Gaussian { dim } | Distribution::UniformBall { dim } => *dim,
            Distribution::ProductBernoulli { p } => p.len(),
        }
    }

    pub fn is_rotationally_symmetric(&self) -> bool {
        !matches!(self, Distribution::ProductBernoulli { .. })
    }

    /// Fills `x` with one draw of a continuous distribution.
    pub fn fill_real<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) {
        match self {
            Distribution::Gaussian { .. } => {
                for xi in x.iter_mut() {
                    *xi = rng.sample(StandardNormal);
                }
            }
            Distribution::UniformBall { dim } => {
                let mut nrm2 = 0.0;
                for xi in x.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    nrm2 += g * g;
                    *xi = g;
                }
                let u: f64 = rng.random();
                let radius = ((*dim + 2) as f64).sqrt() * u.powf(1.0 / *dim as f64);
                let s = radius / nrm2.sqrt();
                x.iter_mut().for_each(|xi| *xi *= s);
            }
            Distribution::ProductBernoulli { .. } => panic!("fill_real on a Boolean distribution"),
        }
    }

    pub fn draw_bits<R: Rng + ?Sized>(&self, rng: &mut R) -> VarSet {
        let Distribution::ProductBernoulli { p } = self else {
            panic!("draw_bits on a continuous distribution")
        };
        let mut x = VarSet::empty(p.len());
        for (i, &q) in p.iter().enumerate() {
            if rng.random::<f64>() < q {
                x.insert(i);
            }
        }
        x
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Distribution::ProductBernoulli { .. } => Point::Bits(self.draw_bits(rng)),
            _ => {
                let mut x = vec![0.0; self.dim()];
                self.fill_real(rng, &mut x);
                Point::Real(x)
            }
        }
    }

    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(Error::InvalidArgument("count must be at least 1".into()));
        }
        let mut rng = rng_from(seed);
        Ok((0..count).map(|_| self.draw(&mut rng)).collect())
    }
}

#[inline]
pub fn halfspace_label(a: &[f64], x: &[f64]) -> Label {
    if dot(a, x) >= 0.0 {
        1
    } else {
        -1
    }
}

#[inline]
pub fn conjunction_label(t: &Monomial, x: &VarSet) -> Label {
    if t.is_subset(x) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Point,
    pub y: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Concept {
    Halfspace(UnitVector),
    Conjunction(Monomial),
}

/// Source of labeled real-valued examples. Counts every draw.
pub trait ExampleSource {
    fn distribution(&self) -> &Distribution;
    /// Overwrites `x` with a fresh point and returns its label.
    fn draw(&mut self, x: &mut [f64]) -> Label;
    fn draws(&self) -> u64;

    fn dim(&self) -> usize {
        self.distribution().dim()
    }
}

pub struct HalfspaceOracle {
    dist: Distribution,
    target: UnitVector,
    rng: SeededRng,
    draws: u64,
}

impl HalfspaceOracle {
    pub fn new(dist: Distribution, target: UnitVector, seed: u64) -> Result<Self> {
        if !dist.is_rotationally_symmetric() {
            return Err(Error::InvalidArgument("halfspace oracle needs a continuous distribution".into()));
        }
        if dist.dim() != target.dim() {
            return Err(Error::DimensionMismatch { expected: dist.dim(), found: target.dim() });
        }
        Ok(HalfspaceOracle { dist, target, rng: rng_from(seed), draws: 0 })
    }

    pub fn target(&self) -> &UnitVector {
        &self.target
    }
}

impl ExampleSource for HalfspaceOracle {
    fn distribution(&self) -> &Distribution {
        &self.dist
    }

    #[inline]
    fn draw(&mut self, x: &mut [f64]) -> Label {
        self.dist.fill_real(&mut self.rng, x);
        self.draws += 1;
        halfspace_label(self.target.coords(), x)
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// Labeled Boolean examples for a hidden conjunction. Counts every draw.
pub struct ConjunctionOracle {
    dist: Distribution,
    target: Monomial,
    rng: SeededRng,
    draws: u64,
}

impl ConjunctionOracle {
    pub fn new(dist: Distribution, target: Monomial, seed: u64) -> Result<Self> {
        if dist.is_rotationally_symmetric() {
            return Err(Error::InvalidArgument("conjunction oracle needs a product distribution".into()));
        }
        if dist.dim() != target.n() {
            return Err(Error::DimensionMismatch { expected: dist.dim(), found: target.n() });
        }
        Ok(ConjunctionOracle { dist, target, rng: rng_from(seed), draws: 0 })
    }

    pub fn draw(&mut self) -> (VarSet, Label) {
        let x = self.dist.draw_bits(&mut self.rng);
        self.draws += 1;
        let y = conjunction_label(&self.target, &x);
        (x, y)
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }
}

/// Endless labeled stream for `target` under `dist`.
pub fn labeled_stream(dist: &Distribution, target: &Concept, seed: u64) -> Result<impl Iterator<Item = LabeledExample>> {
    let dim_ok = match target {
        Concept::Halfspace(a) => a.dim() == dist.dim() && dist.is_rotationally_symmetric(),
        Concept::Conjunction(t) => t.n() == dist.dim() && !dist.is_rotationally_symmetric(),
    };
    if !dim_ok {
        return Err(Error::InvalidArgument("target does not match distribution".into()));
    }
    let dist = dist.clone();
    let target = target.clone();
    let mut rng = rng_from(seed);
    Ok(std::iter::from_fn(move || {
        let x = dist.draw(&mut rng);
        let y = label_point(&target, &x);
        Some(LabeledExample { x, y })
    }))
}

pub fn label_point(c: &Concept, x: &Point) -> Label {
    match (c, x) {
        (Concept::Halfspace(a), Point::Real(v)) => halfspace_label(a.coords(), v),
        (Concept::Conjunction(t), Point::Bits(b)) => conjunction_label(t, b),
        _ => panic!("concept and point domains differ"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl ErrorEstimate {
    fn from_counts(mistakes: usize, samples: usize) -> Self {
        let p = mistakes as f64 / samples as f64;
        ErrorEstimate { estimate: p, std_error: (p * (1.0 - p) / samples as f64).sqrt(), samples }
    }

    /// Binomial standard error evaluated at a hypothesized true rate.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

/// A predictor evaluated by [`estimate_error`].
pub enum Predictor<'a> {
    Halfspace(&'a [f64]),
    Conjunction(&'a Monomial),
    Real(&'a dyn Fn(&[f64]) -> Label),
    Bits(&'a dyn Fn(&VarSet) -> Label),
}

impl Predictor<'_> {
    fn on_real(&self, x: &[f64]) -> Label {
        match self {
            Predictor::Halfspace(a) => halfspace_label(a, x),
            Predictor::Real(f) => f(x),
            _ => panic!("Boolean predictor on a real point"),
        }
    }

    fn on_bits(&self, x: &VarSet) -> Label {
        match self {
            Predictor::Conjunction(t) => conjunction_label(t, x),
            Predictor::Bits(f) => f(x),
            _ => panic!("real predictor on a Boolean point"),
        }
    }
}

/// Monte-Carlo estimate of `P[h(x) ≠ target(x)]`.
pub fn estimate_error(h: &Predictor, target: &Predictor, dist: &Distribution, samples: usize, seed: u64) -> Result<ErrorEstimate> {
    if samples < 100 {
        return Err(Error::InvalidArgument("at least 100 samples required".into()));
    }
    let mut rng = rng_from(seed);
    let mut mistakes = 0usize;
    if dist.is_rotationally_symmetric() {
        let mut x = vec![0.0; dist.dim()];
        for _ in 0..samples {
            dist.fill_real(&mut rng, &mut x);
            mistakes += (h.on_real(&x) != target.on_real(&x)) as usize;
        }
    } else {
        for _ in 0..samples {
            let x = dist.draw_bits(&mut rng);
            mistakes += (h.on_bits(&x) != target.on_bits(&x)) as usize;
        }
    }
    Ok(ErrorEstimate::from_counts(mistakes, samples))
}

#[derive(Debug, Clone, PartialEq)]
pub enum EqAnswer {
    Equivalent,
    /// A point on which the hypothesis is wrong, with the target's label.
    Counterexample { x: VarSet, label: Label },
}

/// Equivalence queries for a hidden monotone conjunction.
#[derive(Debug, Clone)]
pub struct ConjunctionEqOracle {
    target: Monomial,
    queries: u64,
}

impl ConjunctionEqOracle {
    pub fn new(target: Monomial) -> Self {
        ConjunctionEqOracle { target, queries: 0 }
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    /// Candidates, in order: the hypothesis's indicator, the target's, then
    /// their single-bit flips. The first two already decide equality.
    pub fn query(&mut self, h: &Monomial) -> Result<EqAnswer> {
        if h.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: h.n() });
        }
        self.queries += 1;
        if h == &self.target {
            return Ok(EqAnswer::Equivalent);
        }
        let n = self.n();
        let flips = |base: &VarSet| (0..n).map(move |i| base.toggled(i)).collect::<Vec<_>>();
        let cands = [vec![h.clone(), self.target.clone()], flips(h), flips(&self.target)];
        let x = cands
            .iter()
            .flatten()
            .find(|x| h.eval(x) != self.target.eval(x))
            .expect("distinct monomials disagree on one of their indicators")
            .clone();
        let label = conjunction_label(&self.target, &x);
        Ok(EqAnswer::Counterexample { x, label })
    }

    /// Query with an arbitrary monotone hypothesis. Against a monotone
    /// conjunction `T`, equality is decided by the indicator of `T` and the
    /// points `1 − e_i` for `i ∈ T`.
    pub fn query_monotone(&mut self, h: &dyn Fn(&VarSet) -> bool) -> EqAnswer {
        self.queries += 1;
        let n = self.n();
        let ones = VarSet::full(n);
        let cands = std::iter::once(self.target.clone()).chain(self.target.iter().map(|i| ones.toggled(i)));
        for x in cands {
            if h(&x) != self.target.eval(&x) {
                let label = conjunction_label(&self.target, &x);
                return EqAnswer::Counterexample { x, label };
            }
        }
        EqAnswer::Equivalent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolyEqAnswer {
    Equivalent,
    Counterexample { x: VarSet, value: f64 },
}

/// Equivalence queries for a hidden multilinear polynomial.
#[derive(Debug, Clone)]
pub struct PolynomialEqOracle {
    target: MultilinearPolynomial,
    queries: u64,
}

impl PolynomialEqOracle {
    pub fn new(target: MultilinearPolynomial) -> Self {
        PolynomialEqOracle { target, queries: 0 }
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    /// Compares coefficient maps; on mismatch returns the indicator of the
    /// smallest differing term `S`, where the difference evaluates to exactly
    /// its `S`-coefficient.
    pub fn query(&mut self, h: &MultilinearPolynomial) -> Result<PolyEqAnswer> {
        if h.n() != self.target.n() {
            return Err(Error::DimensionMismatch { expected: self.target.n(), found: h.n() });
        }
        self.queries += 1;
        let diff = self.target.sub(h);
        match diff.terms().keys().min_by(|a, b| a.size_lex_cmp(b)) {
            None => Ok(PolyEqAnswer::Equivalent),
            Some(s) => Ok(PolyEqAnswer::Counterexample { x: s.clone(), value: self.target.eval(s) }),
        }
    }
}

/// Membership queries for a hidden multilinear polynomial; keeps a log of
/// every query.
#[derive(Debug, Clone)]
pub struct MqOracle {
    target: MultilinearPolynomial,
    queries: u64,
    history: Vec<(VarSet, f64)>,
}

impl MqOracle {
    pub fn new(target: MultilinearPolynomial) -> Self {
        MqOracle { target, queries: 0, history: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    pub fn query(&mut self, x: &VarSet) -> f64 {
        self.queries += 1;
        let v = self.target.eval(x);
        self.history.push((x.clone(), v));
        v
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn history(&self) -> &[(VarSet, f64)] {
        &self.history
    }

    /// An equivalence oracle for the same hidden target.
    pub fn eq_oracle(&self) -> PolynomialEqOracle {
        PolynomialEqOracle::new(self.target.clone())
    }
}
