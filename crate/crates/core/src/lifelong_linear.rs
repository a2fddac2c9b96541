//! Streaming drivers for halfspace targets that share a low-dimensional
//! subspace (one level) or a union of small subspaces inside it (two levels).

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{angle_to_span_raw, AngleBudget, OrthonormalBasis, UnitVector};
use crate::halfspace::{
    coefficients_over, learn_from_scratch, learn_in_subspace, learn_tau_sparse, LearnerConfig, SparseOutcome,
    SubspaceOutcome,
};
use crate::polynomial::fmt_f64;
use crate::sampling::{estimate_error, halfspace_label, Distribution, ExampleSource, HalfspaceOracle, Label, Predictor};

/// One learning problem: the learner only ever sees draws from its oracle.
#[derive(Debug, Clone)]
pub struct LinearTask {
    pub dist: Distribution,
    pub target: UnitVector,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskPath {
    ReusedLevel2,
    ReusedLevel1,
    Scratch,
}

impl TaskPath {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskPath::ReusedLevel2 => "reused_level2",
            TaskPath::ReusedLevel1 => "reused_level1",
            TaskPath::Scratch => "scratch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub task_index: usize,
    pub path: TaskPath,
    /// Oracle draws, validation and failed attempts included.
    pub samples: u64,
    /// Monte-Carlo error of the final predictor; NaN when evaluation is off.
    pub final_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    pub budget: AngleBudget,
    pub delta: f64,
    pub learner: LearnerConfig,
    /// Fresh samples for each task's final error estimate; 0 disables it.
    pub eval_samples: usize,
    pub eval_seed: u64,
}

impl LinearConfig {
    pub fn new(budget: AngleBudget) -> Self {
        LinearConfig { budget, delta: 0.05, learner: LearnerConfig::default(), eval_samples: 0, eval_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRepState {
    pub n: usize,
    pub w_tilde: Vec<UnitVector>,
    /// Coefficient rows over `w_tilde`; empty for the one-level driver.
    pub u_tilde: Vec<Vec<f64>>,
    /// Per-task coefficients over `w_tilde` (one level) or `u_tilde` (two levels).
    pub c_tilde: Vec<Vec<f64>>,
    pub scratch_indices: Vec<usize>,
    pub total_samples: u64,
    two_level: bool,
}

impl LinearRepState {
    pub fn new(n: usize, two_level: bool) -> Self {
        LinearRepState {
            n,
            w_tilde: Vec::new(),
            u_tilde: Vec::new(),
            c_tilde: Vec::new(),
            scratch_indices: Vec::new(),
            total_samples: 0,
            two_level,
        }
    }

    pub fn k_tilde(&self) -> usize {
        self.w_tilde.len()
    }

    pub fn r_tilde(&self) -> usize {
        self.u_tilde.len()
    }

    pub fn is_two_level(&self) -> bool {
        self.two_level
    }

    fn push_w(&mut self, w: UnitVector) {
        self.w_tilde.push(w);
        if self.two_level {
            self.u_tilde.iter_mut().for_each(|u| u.push(0.0));
        } else {
            self.c_tilde.iter_mut().for_each(|c| c.push(0.0));
        }
    }

    fn push_u(&mut self, u: Vec<f64>) {
        self.u_tilde.push(u);
        self.c_tilde.iter_mut().for_each(|c| c.push(0.0));
    }

    fn unit_row(len: usize) -> Vec<f64> {
        let mut e = vec![0.0; len];
        e[len - 1] = 1.0;
        e
    }

    /// `Ã = C̃W̃` or `Ã = C̃ŨW̃`, one ambient row per task.
    pub fn predictors(&self) -> Vec<Vec<f64>> {
        let level1: Vec<Vec<f64>> = if self.two_level {
            self.u_tilde.iter().map(|u| self.combine_w(u)).collect()
        } else {
            self.w_tilde.iter().map(|w| w.coords().to_vec()).collect()
        };
        self.c_tilde
            .iter()
            .map(|c| {
                let mut a = vec![0.0; self.n];
                for (ci, row) in c.iter().zip(&level1) {
                    a.iter_mut().zip(row).for_each(|(ai, ri)| *ai += ci * ri);
                }
                a
            })
            .collect()
    }

    fn combine_w(&self, u: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (c, w) in u.iter().zip(&self.w_tilde) {
            d.iter_mut().zip(w.coords()).for_each(|(di, wi)| *di += c * wi);
        }
        d
    }

    pub fn predict(&self, predictors: &[Vec<f64>], task: usize, x: &[f64]) -> Label {
        halfspace_label(&predictors[task], x)
    }

    pub fn to_text(&self) -> String {
        let row = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ");
        let mut s = format!("LINREP v1 n={} k={} r={}\n", self.n, self.k_tilde(), self.r_tilde());
        let idx = self.scratch_indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        s.push_str(&format!(
            "# levels={} tasks={} scratch={idx} total_samples={}\n",
            if self.two_level { 2 } else { 1 },
            self.c_tilde.len(),
            self.total_samples
        ));
        for w in &self.w_tilde {
            s.push_str(&row(w.coords()));
            s.push('\n');
        }
        for u in &self.u_tilde {
            s.push_str(&row(u));
            s.push('\n');
        }
        for c in &self.c_tilde {
            s.push_str(&row(c));
            s.push('\n');
        }
        s
    }

    /// Inverse of [`to_text`](Self::to_text). The `#` metadata line is
    /// optional; without it the level count is inferred from `r`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing LINREP v1 header"))?;
        let h = crate::boolean::parse_header(header, "LINREP", &["n", "k", "r"]).map_err(|m| Error::parse(1, m))?;
        let (n, k, r) = (h[0], h[1], h[2]);
        let mut st = LinearRepState::new(n, r > 0);
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, l) in lines {
            let t = l.trim();
            if let Some(meta) = t.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("levels", v)) => st.two_level = v == "2",
                        Some(("scratch", v)) if !v.is_empty() => {
                            st.scratch_indices = v
                                .split(',')
                                .map(|x| x.parse().map_err(|_| Error::parse(i + 1, format!("bad scratch index {x:?}"))))
                                .collect::<Result<_>>()?;
                        }
                        Some(("total_samples", v)) => {
                            st.total_samples = v.parse().map_err(|_| Error::parse(i + 1, "bad total_samples"))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let row = t
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| Error::parse(i + 1, format!("bad number {x:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push((i + 1, row));
        }
        if rows.len() < k + r {
            return Err(Error::parse(rows.last().map_or(1, |r| r.0), "fewer rows than the header declares"));
        }
        let c_len = if st.two_level { r } else { k };
        for (idx, (ln, row)) in rows.into_iter().enumerate() {
            let expected = if idx < k {
                n
            } else if idx < k + r {
                k
            } else {
                c_len
            };
            if row.len() != expected {
                return Err(Error::parse(ln, format!("expected {expected} values, found {}", row.len())));
            }
            if idx < k {
                st.w_tilde.push(UnitVector::from_unit(row).map_err(|e| Error::parse(ln, e.to_string()))?);
            } else if idx < k + r {
                st.u_tilde.push(row);
            } else {
                st.c_tilde.push(row);
            }
        }
        Ok(st)
    }
}

fn evaluate(cfg: &LinearConfig, task: &LinearTask, index: usize, a: &[f64]) -> Result<f64> {
    if cfg.eval_samples == 0 {
        return Ok(f64::NAN);
    }
    let seed = crate::sampling::derive_seed(cfg.eval_seed, &[index as u64]);
    let e = estimate_error(&Predictor::Halfspace(a), &Predictor::Halfspace(task.target.coords()), &task.dist, cfg.eval_samples, seed)?;
    Ok(e.estimate)
}

fn check_task(n: usize, t: &LinearTask) -> Result<()> {
    if t.dist.dim() != n || t.target.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: t.target.dim() });
    }
    Ok(())
}

/// One shared subspace: reuse `W̃` when a validated in-span fit exists,
/// otherwise learn from scratch and append the new direction.
pub fn run_one_level<I>(tasks: I, n: usize, cfg: &LinearConfig) -> Result<(LinearRepState, Vec<TaskOutcome>)>
where
    I: IntoIterator<Item = LinearTask>,
{
    let b = cfg.budget;
    let mut st = LinearRepState::new(n, false);
    let mut span = OrthonormalBasis::empty(n);
    let mut outcomes = Vec::new();
    for (i, task) in tasks.into_iter().enumerate() {
        let mut step = || -> Result<TaskOutcome> {
            check_task(n, &task)?;
            let mut oracle = HalfspaceOracle::new(task.dist.clone(), task.target.clone(), task.seed)?;
            let mut reused = None;
            if !span.is_empty() {
                if let SubspaceOutcome::Found(h) = learn_in_subspace(&span, &mut oracle, b.eps, cfg.delta, &cfg.learner)? {
                    let rows: Vec<Vec<f64>> = st.w_tilde.iter().map(|w| w.coords().to_vec()).collect();
                    reused = Some(coefficients_over(&rows, &span.lift(h.direction.coords()))?);
                }
            }
            let path = match reused {
                Some(c) => {
                    st.c_tilde.push(c);
                    TaskPath::ReusedLevel1
                }
                None => {
                    let h = learn_from_scratch(&mut oracle, b.eps_acc, cfg.delta, &cfg.learner)?;
                    span.push(h.direction.coords())?;
                    st.push_w(h.direction);
                    st.c_tilde.push(LinearRepState::unit_row(st.k_tilde()));
                    st.scratch_indices.push(i);
                    TaskPath::Scratch
                }
            };
            let a = st.predictors().pop().expect("row just pushed");
            Ok(TaskOutcome { task_index: i, path, samples: oracle.draws(), final_error_estimate: evaluate(cfg, &task, i, &a)? })
        };
        let out = step().map_err(|e| e.at_task(i))?;
        st.total_samples += out.samples;
        outcomes.push(out);
    }
    Ok((st, outcomes))
}

/// Two levels: τ-sparse reuse of `Ũ`, else extend `Ũ` from `W̃`, else learn
/// from scratch and extend both.
pub fn run_two_level<I>(tasks: I, n: usize, cfg: &LinearConfig) -> Result<(LinearRepState, Vec<TaskOutcome>)>
where
    I: IntoIterator<Item = LinearTask>,
{
    let b = cfg.budget;
    let (tau, eps_acc_tilde) = match (b.tau, b.eps_acc_tilde) {
        (Some(t), Some(e)) => (t, e),
        _ => return Err(Error::InvalidArgument("two-level driver needs tau and eps_acc_tilde".into())),
    };
    let mut st = LinearRepState::new(n, true);
    let mut span = OrthonormalBasis::empty(n);
    let mut outcomes = Vec::new();
    for (i, task) in tasks.into_iter().enumerate() {
        let mut step = || -> Result<TaskOutcome> {
            check_task(n, &task)?;
            let mut oracle = HalfspaceOracle::new(task.dist.clone(), task.target.clone(), task.seed)?;
            let mut path = None;
            if !st.u_tilde.is_empty() {
                let t = tau.min(st.r_tilde());
                if let SparseOutcome::Found { coefficients, .. } =
                    learn_tau_sparse(&st.u_tilde, &st.w_tilde, t, &mut oracle, b.eps, cfg.delta, &cfg.learner)?
                {
                    st.c_tilde.push(coefficients);
                    path = Some(TaskPath::ReusedLevel2);
                }
            }
            if path.is_none() && !span.is_empty() {
                if let SubspaceOutcome::Found(h) = learn_in_subspace(&span, &mut oracle, eps_acc_tilde, cfg.delta, &cfg.learner)? {
                    let rows: Vec<Vec<f64>> = st.w_tilde.iter().map(|w| w.coords().to_vec()).collect();
                    st.push_u(coefficients_over(&rows, &span.lift(h.direction.coords()))?);
                    st.c_tilde.push(LinearRepState::unit_row(st.r_tilde()));
                    path = Some(TaskPath::ReusedLevel1);
                }
            }
            let path = match path {
                Some(p) => p,
                None => {
                    let h = learn_from_scratch(&mut oracle, b.eps_acc, cfg.delta, &cfg.learner)?;
                    span.push(h.direction.coords())?;
                    st.push_w(h.direction);
                    st.push_u(LinearRepState::unit_row(st.k_tilde()));
                    st.c_tilde.push(LinearRepState::unit_row(st.r_tilde()));
                    st.scratch_indices.push(i);
                    TaskPath::Scratch
                }
            };
            let a = st.predictors().pop().expect("row just pushed");
            Ok(TaskOutcome { task_index: i, path, samples: oracle.draws(), final_error_estimate: evaluate(cfg, &task, i, &a)? })
        };
        let out = step().map_err(|e| e.at_task(i))?;
        st.total_samples += out.samples;
        outcomes.push(out);
    }
    Ok((st, outcomes))
}

/// Greedy in-order count of targets at angle `> γ` from the span of those
/// already counted: a certified γ-separated subsequence.
pub fn gamma_effective_dimension_lower_bound(targets: &[UnitVector], gamma: f64) -> Result<usize> {
    let Some(first) = targets.first() else {
        return Ok(0);
    };
    let n = first.dim();
    let mut span = OrthonormalBasis::empty(n);
    let mut count = 0;
    for t in targets {
        if t.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: t.dim() });
        }
        let angle = if span.is_empty() { FRAC_PI_2 } else { angle_to_span_raw(t.coords(), &span) };
        if angle > gamma {
            count += 1;
            span.push(t.coords())?;
        }
    }
    Ok(count)
}
