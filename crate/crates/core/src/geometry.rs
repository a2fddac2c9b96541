//! Angles between vectors and subspaces, orthonormal bases, and the
//! perturbation bounds used to reason about learned subspaces.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-9;
/// Residual angle below which a vector counts as already spanned.
pub const DEPENDENCE_TOL: f64 = 1e-7;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Normalizes `coords`; fails on a zero or non-finite vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let nrm = norm(&coords);
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidArgument("zero-dimensional vector".into()));
        }
        let mut coords = coords;
        if (nrm - 1.0).abs() > 1e-15 {
            coords.iter_mut().for_each(|c| *c /= nrm);
        }
        Ok(UnitVector { coords })
    }

    /// Accepts `coords` only if it already has unit norm.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        let nrm = norm(&coords);
        if (nrm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!("norm {nrm} is not 1")));
        }
        Ok(UnitVector { coords })
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        UnitVector { coords }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            if let Ok(u) = UnitVector::new(v) {
                return u;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector { coords: self.coords.iter().map(|c| -c).collect() }
    }

    /// Rotates `self` by `angle` towards the unit direction `toward`
    /// (which must be orthogonal to `self`).
    pub fn rotate_towards(&self, toward: &UnitVector, angle: f64) -> UnitVector {
        let (s, c) = angle.sin_cos();
        let coords = self.coords.iter().zip(&toward.coords).map(|(a, b)| c * a + s * b).collect();
        UnitVector::new(coords).expect("rotation of unit vectors is nonzero")
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Angle in `[0, π]`.
pub fn angle_between_vectors(u: &UnitVector, v: &UnitVector) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    Ok(angle_raw(u.coords(), v.coords()))
}

fn angle_raw(u: &[f64], v: &[f64]) -> f64 {
    let d = dot(u, v);
    if d.abs() <= 1.0 - 1e-8 {
        return d.clamp(-1.0, 1.0).acos();
    }
    // arccos is ill-conditioned here; half the chord length is exact.
    if d > 0.0 {
        let chord: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        2.0 * (chord / 2.0).min(1.0).asin()
    } else {
        let chord: f64 = u.iter().zip(v).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
        PI - 2.0 * (chord / 2.0).min(1.0).asin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    dim: usize,
    basis: Vec<UnitVector>,
}

impl OrthonormalBasis {
    pub fn empty(dim: usize) -> Self {
        OrthonormalBasis { dim, basis: Vec::new() }
    }

    pub fn standard(dim: usize) -> Self {
        OrthonormalBasis { dim, basis: (0..dim).map(|i| UnitVector::axis(dim, i)).collect() }
    }

    /// Orthonormalizes `vectors` in order, skipping any that are already spanned.
    pub fn span_of<V: AsRef<[f64]>>(dim: usize, vectors: &[V]) -> Result<Self> {
        let mut b = OrthonormalBasis::empty(dim);
        for v in vectors {
            b.push(v.as_ref())?;
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.basis
    }

    /// Coordinates `Qᵀx`.
    pub fn project_coords(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|q| dot(q.coords(), x)).collect()
    }

    /// Writes `Qᵀx` into `out` without allocating.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, q) in out.iter_mut().zip(&self.basis) {
            *o = dot(q.coords(), x);
        }
    }

    /// Maps subspace coordinates back to the ambient space.
    pub fn lift(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (c, q) in coords.iter().zip(&self.basis) {
            axpy(*c, q.coords(), &mut out);
        }
        out
    }

    /// Component of `x` orthogonal to the span, by modified Gram–Schmidt with
    /// one re-orthogonalization pass.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = x.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q.coords(), &r);
                axpy(-c, q.coords(), &mut r);
            }
        }
        r
    }

    /// Appends the normalized residual of `a` if its angle to the span exceeds
    /// [`DEPENDENCE_TOL`]. Returns whether the basis grew.
    pub fn push(&mut self, a: &[f64]) -> Result<bool> {
        check_dim(self.dim, a.len())?;
        let an = norm(a);
        if an == 0.0 || !an.is_finite() {
            return Ok(false);
        }
        let r = self.residual(a);
        let rn = norm(&r);
        let pn = (an * an - rn * rn).max(0.0).sqrt();
        if rn.atan2(pn) <= DEPENDENCE_TOL || self.rank() == self.dim {
            return Ok(false);
        }
        self.basis.push(UnitVector::new(r)?);
        Ok(true)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.rank(), |i, j| self.basis[j].coords()[i])
    }

    pub fn max_inner_product_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            worst = worst.max((a.dot(a) - 1.0).abs());
            for b in &self.basis[i + 1..] {
                worst = worst.max(a.dot(b).abs());
            }
        }
        worst
    }
}

/// Outcome of [`extend_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    Extended,
    AlreadySpanned,
}

pub fn extend_basis(v: &OrthonormalBasis, a: &UnitVector) -> Result<(OrthonormalBasis, Extension)> {
    let mut out = v.clone();
    let grew = out.push(a.coords())?;
    Ok((out, if grew { Extension::Extended } else { Extension::AlreadySpanned }))
}

/// Angle in `[0, π/2]` between a vector and its projection onto `v`.
pub fn angle_vector_to_subspace(a: &UnitVector, v: &OrthonormalBasis) -> Result<f64> {
    check_dim(v.dim(), a.dim())?;
    if v.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(angle_to_span_raw(a.coords(), v))
}

/// Like [`angle_vector_to_subspace`] for an arbitrary nonzero slice.
pub(crate) fn angle_to_span_raw(a: &[f64], v: &OrthonormalBasis) -> f64 {
    let p = norm(&v.project_coords(a));
    let r = norm(&v.residual(a));
    r.atan2(p)
}

/// `max_{u ∈ U} θ(u, V)`; asymmetric.
pub fn angle_subspace_to_subspace(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let qu = u.to_matrix();
    let qv = v.to_matrix();
    // sin θ from the part of U outside V, cos θ from the cross-Gram matrix;
    // each is accurate where the other is not.
    let cross = qv.transpose() * &qu;
    let resid = &qu - &qv * &cross;
    let sin = resid.svd(false, false).singular_values.max().min(1.0);
    if sin < 0.7 {
        return Ok(sin.asin());
    }
    let cos = if v.rank() < u.rank() {
        0.0
    } else {
        cross.svd(false, false).singular_values.min().clamp(0.0, 1.0)
    };
    Ok(cos.acos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
    /// Violated preconditions; the bound only holds when this is empty.
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn preconditions_hold(&self) -> bool {
        self.violations.is_empty()
    }
}

const BOUND_SLACK: f64 = 1e-12;

/// One-vector perturbation: for `V = span(U, b)` and `Ṽ = span(U, b̃)`,
/// `θ(V, Ṽ) ≤ (π/2)·θ(b̃, b)/θ(b̃, U)`.
pub fn check_vector_perturbation_bound(u: &OrthonormalBasis, b: &UnitVector, b_tilde: &UnitVector) -> Result<BoundReport> {
    check_dim(u.dim(), b.dim())?;
    check_dim(u.dim(), b_tilde.dim())?;
    let mut violations = Vec::new();
    let sep = if u.is_empty() { FRAC_PI_2 } else { angle_vector_to_subspace(b_tilde, u)? };
    if sep <= DEPENDENCE_TOL {
        violations.push("b̃ lies in U".to_string());
    }
    let mut v = u.clone();
    v.push(b.coords())?;
    let mut vt = u.clone();
    vt.push(b_tilde.coords())?;
    let measured = angle_subspace_to_subspace(&v, &vt)?;
    let bound = FRAC_PI_2 * angle_between_vectors(b_tilde, b)? / sep;
    Ok(BoundReport { measured, bound, holds: measured <= bound + BOUND_SLACK, violations })
}

/// Subspace perturbation: with `θ(a_i, ã_i) ≤ ε_acc`, each `ã_i` at angle
/// `≥ γ` from its predecessors' span and `ε_acc ≤ γ²/(10k)`, the spans satisfy
/// `θ(V_k, Ṽ_k) ≤ 2k·ε_acc/γ`.
pub fn check_subspace_perturbation_bound(
    true_vectors: &[UnitVector],
    learned_vectors: &[UnitVector],
    gamma: f64,
    eps_acc: f64,
) -> Result<BoundReport> {
    let k = true_vectors.len();
    check_dim(k, learned_vectors.len())?;
    if k == 0 {
        return Err(Error::EmptyBasis);
    }
    let n = true_vectors[0].dim();
    let mut violations = Vec::new();
    if eps_acc > gamma * gamma / (10.0 * k as f64) {
        violations.push(format!("eps_acc {eps_acc} > gamma^2/(10k) = {}", gamma * gamma / (10.0 * k as f64)));
    }
    let mut learned_span = OrthonormalBasis::empty(n);
    for (i, (a, at)) in true_vectors.iter().zip(learned_vectors).enumerate() {
        let err = angle_between_vectors(a, at)?;
        if err > eps_acc + BOUND_SLACK {
            violations.push(format!("vector {}: angle {err} to its estimate exceeds eps_acc", i + 1));
        }
        if i > 0 {
            let sep = angle_vector_to_subspace(at, &learned_span)?;
            if sep < gamma {
                violations.push(format!("vector {}: separation {sep} below gamma", i + 1));
            }
        }
        learned_span.push(at.coords())?;
    }
    let true_span = OrthonormalBasis::span_of(n, true_vectors)?;
    let measured = angle_subspace_to_subspace(&true_span, &learned_span)?;
    let bound = 2.0 * k as f64 * eps_acc / gamma;
    Ok(BoundReport { measured, bound, holds: measured <= bound + BOUND_SLACK, violations })
}

/// The accuracy/separation parameters threaded through the linear drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBudget {
    pub eps: f64,
    pub eps_acc: f64,
    pub gamma: f64,
    pub gamma_tilde: Option<f64>,
    pub eps_acc_tilde: Option<f64>,
    pub k: usize,
    pub tau: Option<usize>,
}

impl AngleBudget {
    /// `γ = ε/4`, `ε_acc = γ²/(10k)`.
    pub fn one_level(eps: f64, k: usize) -> Result<Self> {
        let gamma = eps / 4.0;
        Self::validated(AngleBudget {
            eps,
            eps_acc: gamma * gamma / (10.0 * k as f64),
            gamma,
            gamma_tilde: None,
            eps_acc_tilde: None,
            k,
            tau: None,
        })
    }

    /// `γ̃ = ε/2`, `ε̃_acc = γ̃ε/(8τ)`, `γ = ε̃_acc/4`, `ε_acc = γ·ε̃_acc/(10k)`.
    pub fn two_level(eps: f64, k: usize, tau: usize) -> Result<Self> {
        let gamma_tilde = eps / 2.0;
        let eps_acc_tilde = gamma_tilde * eps / (8.0 * tau as f64);
        let gamma = eps_acc_tilde / 4.0;
        Self::validated(AngleBudget {
            eps,
            eps_acc: gamma * eps_acc_tilde / (10.0 * k as f64),
            gamma,
            gamma_tilde: Some(gamma_tilde),
            eps_acc_tilde: Some(eps_acc_tilde),
            k,
            tau: Some(tau),
        })
    }

    /// One-level budget with a caller-chosen scratch accuracy. `γ` is the
    /// smallest separation for which the subspace perturbation bound still
    /// applies, but never below `ε/4`.
    pub fn one_level_with_accuracy(eps: f64, k: usize, eps_acc: f64) -> Result<Self> {
        let gamma = (eps / 4.0).max((10.0 * k as f64 * eps_acc).sqrt());
        Self::validated(AngleBudget { eps, eps_acc, gamma, gamma_tilde: None, eps_acc_tilde: None, k, tau: None })
    }

    /// Two-level budget with caller-chosen accuracies at both levels.
    pub fn two_level_with_accuracy(eps: f64, k: usize, tau: usize, eps_acc_tilde: f64, eps_acc: f64) -> Result<Self> {
        if eps_acc > eps_acc_tilde {
            return Err(Error::InvalidArgument("eps_acc must not exceed eps_acc_tilde".into()));
        }
        let gamma = (eps_acc_tilde / 4.0).max((10.0 * k as f64 * eps_acc).sqrt());
        Self::validated(AngleBudget {
            eps,
            eps_acc,
            gamma,
            gamma_tilde: Some(eps / 2.0),
            eps_acc_tilde: Some(eps_acc_tilde),
            k,
            tau: Some(tau),
        })
    }

    fn validated(b: AngleBudget) -> Result<Self> {
        if !(b.eps > 0.0 && b.eps < 0.5) {
            return Err(Error::InvalidArgument(format!("eps {} outside (0, 1/2)", b.eps)));
        }
        if !(b.eps_acc > 0.0 && b.eps_acc < 0.25) {
            return Err(Error::InvalidArgument(format!("eps_acc {} outside (0, 1/4)", b.eps_acc)));
        }
        if b.k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if let Some(t) = b.eps_acc_tilde {
            if !(t > 0.0 && t < 0.25) {
                return Err(Error::InvalidArgument(format!("eps_acc_tilde {t} outside (0, 1/4)")));
            }
        }
        if b.tau == Some(0) {
            return Err(Error::InvalidArgument("tau must be positive".into()));
        }
        Ok(b)
    }

    /// `ε_acc ≤ γ²/(10k)`.
    pub fn perturbation_precondition_holds(&self) -> bool {
        self.eps_acc <= self.gamma * self.gamma / (10.0 * self.k as f64) * (1.0 + 1e-12)
    }
}

/// Two planes through a common axis whose spanning vectors are all within 0.11
/// of each other pairwise, yet the planes are orthogonal: returns
/// `(w1, w2, w1_tilde, w2_tilde)`.
pub fn orthogonal_planes_example() -> (UnitVector, UnitVector, UnitVector, UnitVector) {
    let w2 = UnitVector::axis(3, 0);
    let w2t = w2.clone();
    let w1 = UnitVector::new(vec![0.1f64.cos(), 0.1f64.sin(), 0.0]).unwrap();
    let w1t = UnitVector::new(vec![0.01f64.cos(), 0.0, 0.01f64.sin()]).unwrap();
    (w1, w2, w1t, w2t)
}

/// `U = span(e₁)`, `b̃` at angle 0.1 from `U` in the x-y plane, and `b` at
/// angle 0.01 from `b̃` out of that plane: returns `(u, b, b_tilde)`.
pub fn one_vector_example() -> (UnitVector, UnitVector, UnitVector) {
    let a1 = UnitVector::axis(3, 0);
    let bt = UnitVector::new(vec![0.1f64.cos(), 0.1f64.sin(), 0.0]).unwrap();
    let b = bt.rotate_towards(&UnitVector::axis(3, 2), 0.01);
    (a1, b, bt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use crate::sampling::SeededRng;

    fn uv(c: &[f64]) -> UnitVector {
        UnitVector::new(c.to_vec()).unwrap()
    }

    fn span(vs: &[&[f64]]) -> OrthonormalBasis {
        OrthonormalBasis::span_of(vs[0].len(), vs).unwrap()
    }

    #[test]
    fn vector_angles() {
        assert!((angle_between_vectors(&uv(&[1., 0., 0.]), &uv(&[0., 1., 0.])).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let u = uv(&[0.3, -0.2, 0.9]);
        assert_eq!(angle_between_vectors(&u, &u).unwrap(), 0.0);
        let v = uv(&[0.11f64.cos(), 0.11f64.sin()]);
        assert!((angle_between_vectors(&uv(&[1., 0.]), &v).unwrap() - 0.11).abs() < 1e-14);
        assert!(matches!(
            angle_between_vectors(&uv(&[1., 0.]), &uv(&[1., 0., 0.])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tiny_angles_keep_relative_precision() {
        for &t in &[1e-5f64, 1e-8, 1e-11] {
            let v = uv(&[t.cos(), t.sin(), 0.0]);
            let got = angle_between_vectors(&UnitVector::axis(3, 0), &v).unwrap();
            assert!((got - t).abs() / t < 1e-6, "{t} -> {got}");
            let w = uv(&[-t.cos(), t.sin(), 0.0]);
            let got = angle_between_vectors(&UnitVector::axis(3, 0), &w).unwrap();
            assert!((PI - got - t).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_to_subspace() {
        let v = span(&[&[1., 0., 0.], &[0., 1., 0.]]);
        assert!(angle_vector_to_subspace(&uv(&[0.6, 0.8, 0.]), &v).unwrap() < 1e-15);
        assert!((angle_vector_to_subspace(&uv(&[0., 0., 1.]), &v).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let (a1, _, bt) = one_vector_example();
        let u = OrthonormalBasis::span_of(3, &[a1]).unwrap();
        assert!((angle_vector_to_subspace(&bt, &u).unwrap() - 0.1).abs() < 1e-14);
        assert!(matches!(angle_vector_to_subspace(&bt, &OrthonormalBasis::empty(3)), Err(Error::EmptyBasis)));
    }

    #[test]
    fn subspace_to_subspace() {
        let xy = span(&[&[1., 0., 0.], &[0., 1., 0.]]);
        let xz = span(&[&[1., 0., 0.], &[0., 0., 1.]]);
        assert!(angle_subspace_to_subspace(&xy, &xy).unwrap() < 1e-15);
        assert!((angle_subspace_to_subspace(&xy, &xz).unwrap() - FRAC_PI_2).abs() < 1e-12);
        let x = span(&[&[1., 0., 0.]]);
        assert!(angle_subspace_to_subspace(&x, &xy).unwrap() < 1e-15);
        // asymmetric: the plane is not inside the line
        assert!((angle_subspace_to_subspace(&xy, &x).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn rank_one_subspace_angle_matches_vector_angle() {
        let mut rng = SeededRng::seed_from_u64(3);
        for _ in 0..200 {
            let a = UnitVector::random(&mut rng, 6);
            let vs: Vec<UnitVector> = (0..3).map(|_| UnitVector::random(&mut rng, 6)).collect();
            let v = OrthonormalBasis::span_of(6, &vs).unwrap();
            let ua = OrthonormalBasis::span_of(6, &[a.clone()]).unwrap();
            let s = angle_subspace_to_subspace(&ua, &v).unwrap();
            let t = angle_vector_to_subspace(&a, &v).unwrap();
            assert!((s - t).abs() < 1e-10, "{s} vs {t}");
        }
    }

    #[test]
    fn extend() {
        let x = span(&[&[1., 0., 0.]]);
        let (b, e) = extend_basis(&x, &uv(&[0., 1., 0.])).unwrap();
        assert_eq!(e, Extension::Extended);
        assert_eq!(b.vectors()[1].coords(), &[0., 1., 0.]);
        let (b, e) = extend_basis(&x, &uv(&[1., 0., 0.])).unwrap();
        assert_eq!(e, Extension::AlreadySpanned);
        assert_eq!(b, x);
        let (b, e) = extend_basis(&x, &uv(&[1., 1., 0.])).unwrap();
        assert_eq!(e, Extension::Extended);
        let q = b.vectors()[1].coords();
        assert!(q[0].abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15 && q[2] == 0.0);
    }

    #[test]
    fn gram_schmidt_stays_orthonormal_on_nearly_dependent_input() {
        let mut rng = SeededRng::seed_from_u64(9);
        let base = UnitVector::random(&mut rng, 40);
        let vs: Vec<UnitVector> = (0..30)
            .map(|_| base.rotate_towards(&orthogonal_direction(&base, &mut rng), 1e-5))
            .collect();
        let b = OrthonormalBasis::span_of(40, &vs).unwrap();
        assert!(b.rank() > 1);
        assert!(b.max_inner_product_defect() < 1e-9);
    }

    fn orthogonal_direction(a: &UnitVector, rng: &mut SeededRng) -> UnitVector {
        let basis = OrthonormalBasis::span_of(a.dim(), &[a.clone()]).unwrap();
        UnitVector::new(basis.residual(UnitVector::random(rng, a.dim()).coords())).unwrap()
    }

    #[test]
    fn subspace_bound_trivial_and_one_vector_case() {
        let a = uv(&[0.2, 0.4, 0.1, 0.9]);
        let r = check_subspace_perturbation_bound(&[a.clone()], &[a], 0.5, 0.001).unwrap();
        assert_eq!(r.measured, 0.0);
        assert!(r.holds && r.preconditions_hold());

        let (a1, b, bt) = one_vector_example();
        let u = OrthonormalBasis::span_of(3, &[a1]).unwrap();
        let r = check_vector_perturbation_bound(&u, &b, &bt).unwrap();
        assert!(r.preconditions_hold());
        assert!((r.bound - FRAC_PI_2 * 0.1).abs() < 1e-12);
        assert!(r.measured <= r.bound, "{r:?}");
    }

    #[test]
    fn subspace_bound_reports_violations() {
        let a = UnitVector::axis(3, 0);
        let off = uv(&[1.0, 0.1, 0.0]);
        let r = check_subspace_perturbation_bound(&[a.clone(), a.clone()], &[off, a], 0.5, 0.02).unwrap();
        assert_eq!(r.violations.len(), 3, "{:?}", r.violations);
    }

    #[test]
    fn orthogonal_planes_counterexample() {
        let (w1, w2, w1t, w2t) = orthogonal_planes_example();
        assert!(angle_between_vectors(&w1, &w1t).unwrap() <= 0.11);
        assert_eq!(angle_between_vectors(&w2, &w2t).unwrap(), 0.0);
        let v = OrthonormalBasis::span_of(3, &[w1, w2]).unwrap();
        let vt = OrthonormalBasis::span_of(3, &[w1t, w2t]).unwrap();
        assert!((angle_subspace_to_subspace(&v, &vt).unwrap() - FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn budget_constants() {
        let b = AngleBudget::one_level(0.1, 5).unwrap();
        assert_eq!(b.gamma, 0.025);
        assert!((b.eps_acc - 1.25e-5).abs() < 1e-18);
        assert!(b.perturbation_precondition_holds());
        let b = AngleBudget::two_level(0.1, 6, 2).unwrap();
        assert!((b.eps_acc_tilde.unwrap() - 0.05 * 0.1 / 16.0).abs() < 1e-15);
        let b = AngleBudget::one_level_with_accuracy(0.1, 5, 1e-4).unwrap();
        assert!(b.perturbation_precondition_holds());
        assert!((b.gamma - 0.005f64.sqrt()).abs() < 1e-15);
        assert!(AngleBudget::one_level(0.6, 5).is_err());
    }
}
