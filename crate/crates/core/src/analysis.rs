//! Fixed-step integration, global errors and convergence studies.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{classical_step, StepInput};
use crate::error::{Error, Result};
use crate::format::{order4, sci6};
use crate::jet::JetProvider;
use crate::problems::OdeProblem;
use crate::rbf::{rbf_step, RbfStepTrace, ShapeMode};
use crate::tableau::MethodSpec;

/// Advance one step with any catalog method. RBF methods also return their
/// trace.
pub fn step(
    method: &MethodSpec,
    rhs: &JetProvider,
    input: StepInput,
    mode: ShapeMode,
) -> Result<(f64, Option<RbfStepTrace>)> {
    if method.is_rbf() {
        rbf_step(method, rhs, input, mode).map(|(v, tr)| (v, Some(tr)))
    } else {
        classical_step(&method.tableau.to_numeric(), rhs, input).map(|v| (v, None))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub collect_trace: bool,
    pub shape: ShapeMode,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { collect_trace: false, shape: ShapeMode::Optimal }
    }
}

/// Uniform-grid solution `t_n = t0 + n h`, `n = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub method: String,
    pub problem: String,
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    /// One entry per step for RBF methods when requested.
    pub traces: Option<Vec<RbfStepTrace>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn last(&self) -> (f64, f64) {
        (*self.times.last().unwrap(), *self.states.last().unwrap())
    }
}

/// `N` equal steps of `method` from `(t0, u0)`.
pub fn integrate(problem: &OdeProblem, method: &MethodSpec, n: usize) -> Result<Trajectory> {
    integrate_with(problem, method, n, &IntegrateOptions::default())
}

pub fn integrate_with(
    problem: &OdeProblem,
    method: &MethodSpec,
    n: usize,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidStepCounts("N must be at least 1".into()));
    }
    let h = (problem.t_end - problem.t0) / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut traces = (opts.collect_trace && method.is_rbf()).then(|| Vec::with_capacity(n));
    let mut v = problem.u0;
    times.push(problem.t0);
    states.push(v);
    for i in 0..n {
        let t = problem.t0 + i as f64 * h;
        let wrap = |e: Error| Error::Step { step: i, source: Box::new(e) };
        let input = StepInput::new(t, v, h).map_err(wrap)?;
        let (next, tr) = step(method, &problem.jet, input, opts.shape).map_err(wrap)?;
        if let (Some(list), Some(tr)) = (traces.as_mut(), tr) {
            list.push(tr);
        }
        v = next;
        times.push(problem.t0 + (i + 1) as f64 * h);
        states.push(v);
    }
    Ok(Trajectory {
        method: method.name.clone(),
        problem: problem.name.clone(),
        h,
        times,
        states,
        traces,
    })
}

/// How the error of a trajectory against the exact solution is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ErrorNorm {
    /// `max_n |v_n - u(t_n)|` over the grid. Reproduces the reference tables.
    #[default]
    Max,
    /// `|v_N - u(t_N)|`.
    Endpoint,
    /// `h sum_{n=1..N} |v_n - u(t_n)|`.
    GridL1,
}

impl ErrorNorm {
    pub fn tag(&self) -> &'static str {
        match self {
            ErrorNorm::Max => "max",
            ErrorNorm::Endpoint => "endpoint",
            ErrorNorm::GridL1 => "grid-l1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(ErrorNorm::Max),
            "endpoint" => Ok(ErrorNorm::Endpoint),
            "grid-l1" | "l1" => Ok(ErrorNorm::GridL1),
            other => Err(Error::InvalidParameter(format!(
                "unknown error norm `{other}` (expected max, endpoint or grid-l1)"
            ))),
        }
    }
}

pub fn global_error(traj: &Trajectory, exact: &dyn Fn(f64) -> f64, norm: ErrorNorm) -> f64 {
    let err = |i: usize| (traj.states[i] - exact(traj.times[i])).abs();
    let n = traj.steps();
    match norm {
        ErrorNorm::Endpoint => err(n),
        ErrorNorm::Max => (0..=n).map(err).fold(0.0, f64::max),
        ErrorNorm::GridL1 => traj.h.abs() * (1..=n).map(err).sum::<f64>(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// `log2(e_{i-1} / e_i)`; absent on the first row and when undefined.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub method: String,
    pub problem: String,
    pub norm: ErrorNorm,
    pub rows: Vec<ConvergenceRow>,
}

/// Consecutive-ratio orders; zero or non-finite ratios give `None`.
pub fn observed_orders(errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for i in 1..errors.len() {
        let (a, b) = (errors[i - 1], errors[i]);
        let p = (a / b).log2();
        if a > 0.0 && b > 0.0 && p.is_finite() {
            out[i] = Some(p);
        }
    }
    out
}

/// Reject step-count lists that are not a doubling sequence of length >= 2.
pub fn check_doubling(ns: &[usize]) -> Result<()> {
    if ns.len() < 2 {
        return Err(Error::InvalidStepCounts(format!("need at least two step counts, got {}", ns.len())));
    }
    if ns[0] == 0 {
        return Err(Error::InvalidStepCounts("step counts must be positive".into()));
    }
    if let Some(w) = ns.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidStepCounts(format!("{} does not double {}", w[1], w[0])));
    }
    Ok(())
}

/// `N0, 2 N0, ..., N0 2^(k-1)`.
pub fn doubling(n0: usize, count: usize) -> Vec<usize> {
    (0..count).map(|i| n0 << i).collect()
}

fn table_from(problem: &OdeProblem, method: &MethodSpec, ns: &[usize], norm: ErrorNorm, errors: Vec<f64>) -> ConvergenceTable {
    let orders = observed_orders(&errors);
    ConvergenceTable {
        method: method.name.clone(),
        problem: problem.name.clone(),
        norm,
        rows: ns
            .iter()
            .zip(errors)
            .zip(orders)
            .map(|((&n, error), order)| ConvergenceRow { n, error, order })
            .collect(),
    }
}

fn exact_of(problem: &OdeProblem) -> Result<&(dyn Fn(f64) -> f64 + Send + Sync)> {
    problem.exact.as_deref().ok_or_else(|| Error::NoExactSolution(problem.name.clone()))
}

pub fn convergence_study(
    problem: &OdeProblem,
    method: &MethodSpec,
    ns: &[usize],
    norm: ErrorNorm,
) -> Result<ConvergenceTable> {
    Ok(convergence_studies(problem, &[method], ns, norm)?.remove(0))
}

/// Studies for several methods on one problem. Every `(method, N)` run is
/// independent and evaluated in parallel; tables come back in input order.
pub fn convergence_studies(
    problem: &OdeProblem,
    methods: &[&MethodSpec],
    ns: &[usize],
    norm: ErrorNorm,
) -> Result<Vec<ConvergenceTable>> {
    check_doubling(ns)?;
    let exact = exact_of(problem)?;
    let jobs: Vec<(usize, usize)> =
        (0..methods.len()).flat_map(|m| (0..ns.len()).map(move |k| (m, k))).collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(m, k)| integrate(problem, methods[m], ns[k]).map(|tr| global_error(&tr, exact, norm)))
        .collect::<Result<_>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let errs = errors[m * ns.len()..(m + 1) * ns.len()].to_vec();
            table_from(problem, method, ns, norm, errs)
        })
        .collect())
}

impl ConvergenceTable {
    pub fn final_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,error,order\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.n, sci6(r.error), order4(r.order));
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        side_by_side_markdown(std::slice::from_ref(self))
    }
}

/// Tables over the same N list as one CSV: `N,<m> error,<m> order,...`.
pub fn side_by_side_csv(tables: &[ConvergenceTable]) -> String {
    let mut s = String::from("N");
    for t in tables {
        let _ = write!(s, ",{} error,{} order", t.method, t.method);
    }
    s.push('\n');
    for (i, row) in tables.first().map(|t| t.rows.as_slice()).unwrap_or(&[]).iter().enumerate() {
        let _ = write!(s, "{}", row.n);
        for t in tables {
            let r = &t.rows[i];
            let _ = write!(s, ",{},{}", sci6(r.error), order4(r.order));
        }
        s.push('\n');
    }
    s
}

/// Aligned markdown with one `error | order` column pair per method.
pub fn side_by_side_markdown(tables: &[ConvergenceTable]) -> String {
    let mut header = vec!["N".to_string()];
    for t in tables {
        header.push(format!("{} error", t.method));
        header.push(format!("{} order", t.method));
    }
    let nrows = tables.first().map_or(0, |t| t.rows.len());
    let body: Vec<Vec<String>> = (0..nrows)
        .map(|i| {
            let mut row = vec![tables[0].rows[i].n.to_string()];
            for t in tables {
                row.push(sci6(t.rows[i].error));
                row.push(order4(t.rows[i].order));
            }
            row
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap())
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut s = line(&header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    s.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for r in &body {
        s.push_str(&line(r));
    }
    s
}
