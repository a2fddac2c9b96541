//! Dense two-phase primal simplex with Bland's rule, for
//! `min cᵀx` subject to row constraints and `x ≥ 0`.

use std::fmt;

use crate::error::{Error, Result};
use crate::polynomial::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl Cmp {
    pub fn as_str(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        }
    }

    fn flipped(self) -> Cmp {
        match self {
            Cmp::Le => Cmp::Ge,
            Cmp::Ge => Cmp::Le,
            Cmp::Eq => Cmp::Eq,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    BudgetExceeded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::BudgetExceeded => "budget_exceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub pivots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub tol: f64,
    pub max_pivots: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tol: 1e-9, max_pivots: 1_000_000 }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram { objective, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::InvalidArgument("linear program without variables".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::InvalidArgument(format!("constraint {} has {} coefficients, expected {n}", i + 1, c.coeffs.len())));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("constraint {} is not finite", i + 1)));
            }
        }
        if self.objective.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("objective is not finite".into()));
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Indices of constraints (and `x ≥ 0`, reported as `usize::MAX`) violated by more than `tol`.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
                match c.cmp {
                    Cmp::Le => lhs > c.rhs + tol,
                    Cmp::Ge => lhs < c.rhs - tol,
                    Cmp::Eq => (lhs - c.rhs).abs() > tol,
                }
            })
            .map(|(i, _)| i)
            .collect();
        if x.iter().any(|&xi| xi < -tol) {
            v.push(usize::MAX);
        }
        v
    }

    /// The `LP v1` text format.
    pub fn to_text(&self) -> String {
        let row = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
        let mut s = format!("LP v1\nmin\n{}\n", row(&self.objective));
        for c in &self.constraints {
            s.push_str(&format!("{} {} {}\n", row(&c.coeffs), c.cmp.as_str(), fmt_f64(c.rhs)));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let num = |ln: usize, t: &str| t.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad number {t:?}")));
        match lines.next() {
            Some((_, "LP v1")) => {}
            Some((ln, _)) => return Err(Error::parse(ln, "expected `LP v1` header")),
            None => return Err(Error::parse(1, "empty input")),
        }
        match lines.next() {
            Some((_, "min")) => {}
            Some((ln, _)) => return Err(Error::parse(ln, "expected `min`")),
            None => return Err(Error::parse(2, "missing `min`")),
        }
        let (ln, obj) = lines.next().ok_or_else(|| Error::parse(3, "missing objective row"))?;
        let objective = obj.split_whitespace().map(|t| num(ln, t)).collect::<Result<Vec<_>>>()?;
        let mut lp = LinearProgram::new(objective);
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            let pos = toks
                .iter()
                .position(|t| matches!(*t, "<=" | ">=" | "="))
                .ok_or_else(|| Error::parse(ln, "constraint lacks <=, >= or ="))?;
            if pos + 2 != toks.len() {
                return Err(Error::parse(ln, "expected `<coeffs…> <op> <rhs>`"));
            }
            let cmp = match toks[pos] {
                "<=" => Cmp::Le,
                ">=" => Cmp::Ge,
                _ => Cmp::Eq,
            };
            let coeffs = toks[..pos].iter().map(|t| num(ln, t)).collect::<Result<Vec<_>>>()?;
            if coeffs.len() != lp.num_vars() {
                return Err(Error::parse(ln, format!("expected {} coefficients, found {}", lp.num_vars(), coeffs.len())));
            }
            lp.add(coeffs, cmp, num(ln, toks[pos + 1])?);
        }
        Ok(lp)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows × (cols + 1)`, last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs of the current phase, plus `−z` in the last slot.
    d: Vec<f64>,
    pivots: u64,
}

enum Phase {
    Optimal,
    Unbounded,
    Budget,
}

impl Tableau {
    fn stride(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stride() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let s = self.stride();
        let p = self.a[r * s + q];
        let (before, rest) = self.a.split_at_mut(r * s);
        let (prow, after) = rest.split_at_mut(s);
        prow.iter_mut().for_each(|x| *x /= p);
        prow[q] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                row.iter_mut().zip(prow.iter()).for_each(|(x, y)| *x -= f * y);
                row[q] = 0.0;
            }
        };
        before.chunks_exact_mut(s).for_each(eliminate);
        after.chunks_exact_mut(s).for_each(eliminate);
        eliminate(&mut self.d);
        self.basis[r] = q;
        self.pivots += 1;
    }

    /// Bland's rule: least-index improving column, least-index leaving
    /// variable among ratio ties.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool, opts: &SimplexOptions) -> Phase {
        loop {
            let Some(q) = (0..self.cols).find(|&j| allowed(j) && self.d[j] < -opts.tol) else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aiq = self.at(i, q);
                if aiq > opts.tol {
                    let ratio = self.rhs(i) / aiq;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - opts.tol || (ratio <= lr + opts.tol && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Phase::Unbounded;
            };
            if self.pivots >= opts.max_pivots {
                return Phase::Budget;
            }
            self.pivot(r, q);
        }
    }

    fn set_costs(&mut self, c: &[f64]) {
        let s = self.stride();
        self.d = vec![0.0; s];
        self.d[..c.len()].copy_from_slice(c);
        for i in 0..self.rows {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * s..(i + 1) * s];
                self.d.iter_mut().zip(row).for_each(|(d, a)| *d -= cb * a);
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let s = self.stride();
        self.a.drain(r * s..(r + 1) * s);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

pub fn solve_lp(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.constraints.len();
    // Normalize to nonnegative right-hand sides.
    let rows: Vec<(Vec<f64>, Cmp, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                (c.coeffs.iter().map(|x| -x).collect(), c.cmp.flipped(), -c.rhs)
            } else {
                (c.coeffs.clone(), c.cmp, c.rhs)
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Cmp::Le).count();
    let cols = n + n_slack + n_art;
    let first_art = n + n_slack;
    let mut t = Tableau { rows: m, cols, a: vec![0.0; m * (cols + 1)], basis: vec![0; m], d: Vec::new(), pivots: 0 };
    let (mut si, mut ai) = (n, first_art);
    for (i, (coeffs, cmp, rhs)) in rows.iter().enumerate() {
        let s = t.stride();
        let row = &mut t.a[i * s..(i + 1) * s];
        row[..n].copy_from_slice(coeffs);
        row[cols] = *rhs;
        match cmp {
            Cmp::Le => {
                row[si] = 1.0;
                t.basis[i] = si;
                si += 1;
            }
            Cmp::Ge => {
                row[si] = -1.0;
                row[ai] = 1.0;
                t.basis[i] = ai;
                si += 1;
                ai += 1;
            }
            Cmp::Eq => {
                row[ai] = 1.0;
                t.basis[i] = ai;
                ai += 1;
            }
        }
    }
    let finish = |t: &Tableau, status: LpStatus| {
        let mut values = vec![0.0; n];
        for i in 0..t.rows {
            if t.basis[i] < n {
                values[t.basis[i]] = t.rhs(i).max(0.0);
            }
        }
        let objective = lp.objective_at(&values);
        LpSolution { values, objective, status, pivots: t.pivots }
    };

    if n_art > 0 {
        let mut c1 = vec![0.0; cols];
        c1[first_art..].iter_mut().for_each(|x| *x = 1.0);
        t.set_costs(&c1);
        match t.run(&|_| true, opts) {
            Phase::Budget => return Ok(finish(&t, LpStatus::BudgetExceeded)),
            Phase::Unbounded => unreachable!("phase one is bounded below by zero"),
            Phase::Optimal => {}
        }
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if -t.d[cols] > opts.tol * scale {
            return Ok(finish(&t, LpStatus::Infeasible));
        }
        // Pivot remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&j| t.at(i, j).abs() > opts.tol) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.remove_row(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    let mut c2 = vec![0.0; cols];
    c2[..n].copy_from_slice(&lp.objective);
    t.set_costs(&c2);
    let status = match t.run(&|j| j < first_art, opts) {
        Phase::Optimal => LpStatus::Optimal,
        Phase::Unbounded => LpStatus::Unbounded,
        Phase::Budget => LpStatus::BudgetExceeded,
    };
    Ok(finish(&t, status))
}
