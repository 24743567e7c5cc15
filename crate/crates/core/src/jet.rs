//! Derivative jets of the right-hand side `f(t, u)` up to total order three.
//!
//! Production runs always use analytic jets (hand-written closed forms or the
//! forward-mode [`BiJet`] arithmetic). [`fd_jet`] exists as an independent
//! oracle for checking them.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use crate::problems::analytic_jets_for_benchmarks;

/// `f` and its partial derivatives at one point `(t, u)`.
///
/// Mixed partials are stored once: `f_tu = f_ut`, `f_ttu = f_utt`,
/// `f_tuu = f_uut`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet3<S = f64> {
    pub f: S,
    pub f_t: S,
    pub f_u: S,
    pub f_tt: S,
    pub f_tu: S,
    pub f_uu: S,
    pub f_ttt: S,
    pub f_ttu: S,
    pub f_tuu: S,
    pub f_uuu: S,
}

/// Entry names in [`Jet3::entries`] order.
pub const JET_ENTRY_NAMES: [&str; 10] =
    ["f", "f_t", "f_u", "f_tt", "f_tu", "f_uu", "f_ttt", "f_ttu", "f_tuu", "f_uuu"];

impl<S: Copy> Jet3<S> {
    pub fn entries(&self) -> [S; 10] {
        [
            self.f, self.f_t, self.f_u, self.f_tt, self.f_tu, self.f_uu, self.f_ttt, self.f_ttu,
            self.f_tuu, self.f_uuu,
        ]
    }

    pub fn from_entries(e: [S; 10]) -> Self {
        Jet3 {
            f: e[0],
            f_t: e[1],
            f_u: e[2],
            f_tt: e[3],
            f_tu: e[4],
            f_uu: e[5],
            f_ttt: e[6],
            f_ttu: e[7],
            f_tuu: e[8],
            f_uuu: e[9],
        }
    }

    pub fn map<T: Copy>(&self, g: impl Fn(S) -> T) -> Jet3<T> {
        Jet3::from_entries(self.entries().map(g))
    }
}

impl<S: Scalar> Jet3<S> {
    pub fn zero() -> Self {
        Self::from_entries([S::lift(0.0); 10])
    }

    /// Jet of the linear right-hand side `f = lambda u`.
    pub fn linear(lambda: S, u: S) -> Self {
        let mut j = Self::zero();
        j.f = lambda * u;
        j.f_u = lambda;
        j
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|e| e.is_finite())
    }
}

impl Add for Jet3<f64> {
    type Output = Jet3<f64>;

    fn add(self, rhs: Self) -> Self {
        let (a, b) = (self.entries(), rhs.entries());
        Jet3::from_entries(std::array::from_fn(|i| a[i] + b[i]))
    }
}

/// How a [`JetProvider`] obtains its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

type RhsFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type JetFn = dyn Fn(f64, f64) -> Result<Jet3> + Send + Sync;

/// Right-hand side bundled with a jet evaluator.
#[derive(Clone)]
pub struct JetProvider {
    provenance: Provenance,
    f: Arc<RhsFn>,
    jet: Arc<JetFn>,
}

impl JetProvider {
    pub fn analytic(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        jet: impl Fn(f64, f64) -> Result<Jet3> + Send + Sync + 'static,
    ) -> Self {
        JetProvider { provenance: Provenance::Analytic, f: Arc::new(f), jet: Arc::new(jet) }
    }

    /// Provider whose jet comes from [`fd_jet`] with a fixed `step`, or from
    /// [`fd_jet_adaptive`] when `step = None`.
    pub fn finite_difference(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        step: Option<f64>,
    ) -> Self {
        let f: Arc<RhsFn> = Arc::new(f);
        let g = f.clone();
        let jet = move |t: f64, u: f64| {
            match step {
                Some(h) => fd_jet(&*g, t, u, h),
                None => fd_jet_adaptive(&*g, t, u),
            }
        };
        JetProvider { provenance: Provenance::FiniteDifference, f, jet: Arc::new(jet) }
    }

    #[inline]
    pub fn f(&self, t: f64, u: f64) -> f64 {
        (self.f)(t, u)
    }

    pub fn jet(&self, t: f64, u: f64) -> Result<Jet3> {
        (self.jet)(t, u)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

impl fmt::Debug for JetProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetProvider").field("provenance", &self.provenance).finish()
    }
}

/// Default base step for [`fd_jet`]: `eps^(1/7) * max(1, |t|, |u|)`, the
/// roundoff/truncation balance for a fourth-order third-derivative estimate.
pub fn default_fd_step(t: f64, u: f64) -> f64 {
    f64::EPSILON.powf(1.0 / 7.0) * 1f64.max(t.abs()).max(u.abs())
}

// 1-D central stencils on offsets -2..=2 for derivative orders 0..=3, all
// second-order accurate with an even error expansion.
const STENCIL: [[f64; 5]; 4] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
];

// (order in t, order in u) for each jet entry
const ORDERS: [(usize, usize); 10] =
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

fn stencil_pass(f: &dyn Fn(f64, f64) -> f64, t: f64, u: f64, h: f64) -> Result<[f64; 10]> {
    let mut grid = [[f64::NAN; 5]; 5];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            // only points some stencil touches
            let needed = ORDERS.iter().any(|&(a, b)| STENCIL[a][i] != 0.0 && STENCIL[b][j] != 0.0);
            if !needed {
                continue;
            }
            let (tp, up) = (t + (i as f64 - 2.0) * h, u + (j as f64 - 2.0) * h);
            let v = f(tp, up);
            if !v.is_finite() {
                return Err(Error::NonFiniteStencil { t: tp, u: up });
            }
            *cell = v;
        }
    }
    Ok(ORDERS.map(|(a, b)| {
        let mut acc = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let w = STENCIL[a][i] * STENCIL[b][j];
                if w != 0.0 {
                    acc += w * grid[i][j];
                }
            }
        }
        acc / h.powi((a + b) as i32)
    }))
}

/// Finite-difference jet of `f` at `(t, u)`.
///
/// Stencil layout: a 5x5 tensor grid `(t + i h, u + j h)`, `i, j in -2..=2`.
/// Each partial `d^a/dt^a d^b/du^b` is the tensor product of the 1-D central
/// stencils of orders `a` and `b` (second-order accurate). The pass is run at
/// `h` and `h/2` and combined by one Richardson step, `(4 D(h/2) - D(h)) / 3`,
/// which makes every entry fourth-order accurate.
pub fn fd_jet(f: &dyn Fn(f64, f64) -> f64, t: f64, u: f64, step: f64) -> Result<Jet3> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite-difference step {step} must be > 0")));
    }
    let coarse = stencil_pass(f, t, u, step)?;
    let fine = stencil_pass(f, t, u, 0.5 * step)?;
    let mut e: [f64; 10] = std::array::from_fn(|k| (4.0 * fine[k] - coarse[k]) / 3.0);
    e[0] = fine[0];
    Ok(Jet3::from_entries(e))
}

/// [`fd_jet`] over the step ladder `default_fd_step * 2^(1-k)`, `k = 0..6`,
/// keeping per entry the estimate that changed least from the previous
/// rung. Truncation error dominates at the top of the ladder and roundoff at
/// the bottom; the flattest spot sits between them. Rungs whose stencil
/// leaves the domain of `f` are skipped.
pub fn fd_jet_adaptive(f: &dyn Fn(f64, f64) -> f64, t: f64, u: f64) -> Result<Jet3> {
    let base = default_fd_step(t, u);
    let mut rungs = Vec::new();
    let mut last_err = None;
    for k in 0..6 {
        match fd_jet(f, t, u, base * 2f64.powi(1 - k)) {
            Ok(j) => rungs.push(j.entries()),
            Err(e) => last_err = Some(e),
        }
    }
    match rungs.len() {
        0 => return Err(last_err.expect("at least one rung ran")),
        1 => return Ok(Jet3::from_entries(rungs[0])),
        _ => {}
    }
    let e = std::array::from_fn(|k| {
        let best = (1..rungs.len())
            .min_by(|&a, &b| {
                let da = (rungs[a][k] - rungs[a - 1][k]).abs();
                let db = (rungs[b][k] - rungs[b - 1][k]).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        rungs[best][k]
    });
    Ok(Jet3::from_entries(e))
}

/// Bivariate truncated Taylor polynomial of total degree 3 in `(dt, du)`:
/// forward-mode arithmetic that yields exact jets of rational expressions.
///
/// Coefficient layout follows [`JET_ENTRY_NAMES`]: `c[k]` multiplies
/// `dt^a du^b` with `(a, b) = ORDERS[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiJet {
    c: [f64; 10],
}

const fn idx(a: usize, b: usize) -> usize {
    match (a, b) {
        (0, 0) => 0,
        (1, 0) => 1,
        (0, 1) => 2,
        (2, 0) => 3,
        (1, 1) => 4,
        (0, 2) => 5,
        (3, 0) => 6,
        (2, 1) => 7,
        (1, 2) => 8,
        _ => 9,
    }
}

impl BiJet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; 10];
        c[0] = v;
        BiJet { c }
    }

    /// The time variable expanded at `t`.
    pub fn var_t(t: f64) -> Self {
        let mut j = Self::constant(t);
        j.c[1] = 1.0;
        j
    }

    /// The state variable expanded at `u`.
    pub fn var_u(u: f64) -> Self {
        let mut j = Self::constant(u);
        j.c[2] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn recip(self) -> Self {
        let a0 = self.c[0];
        // 1/(a0 (1 + r)) = (1 - r + r^2 - r^3) / a0, r without constant term
        let mut r = self * BiJet::constant(1.0 / a0);
        r.c[0] = 0.0;
        let one = BiJet::constant(1.0);
        let r2 = r * r;
        (one - r + r2 - r2 * r) * BiJet::constant(1.0 / a0)
    }

    pub fn to_jet(&self) -> Jet3 {
        let c = &self.c;
        Jet3 {
            f: c[idx(0, 0)],
            f_t: c[idx(1, 0)],
            f_u: c[idx(0, 1)],
            f_tt: 2.0 * c[idx(2, 0)],
            f_tu: c[idx(1, 1)],
            f_uu: 2.0 * c[idx(0, 2)],
            f_ttt: 6.0 * c[idx(3, 0)],
            f_ttu: 2.0 * c[idx(2, 1)],
            f_tuu: 2.0 * c[idx(1, 2)],
            f_uuu: 6.0 * c[idx(0, 3)],
        }
    }
}

impl From<f64> for BiJet {
    fn from(v: f64) -> Self {
        BiJet::constant(v)
    }
}

impl Add for BiJet {
    type Output = BiJet;
    fn add(self, o: BiJet) -> BiJet {
        BiJet { c: std::array::from_fn(|k| self.c[k] + o.c[k]) }
    }
}

impl Sub for BiJet {
    type Output = BiJet;
    fn sub(self, o: BiJet) -> BiJet {
        BiJet { c: std::array::from_fn(|k| self.c[k] - o.c[k]) }
    }
}

impl Neg for BiJet {
    type Output = BiJet;
    fn neg(self) -> BiJet {
        BiJet { c: self.c.map(|x| -x) }
    }
}

impl Mul for BiJet {
    type Output = BiJet;
    fn mul(self, o: BiJet) -> BiJet {
        let mut c = [0.0; 10];
        for (k1, &(a1, b1)) in ORDERS.iter().enumerate() {
            if self.c[k1] == 0.0 {
                continue;
            }
            for (k2, &(a2, b2)) in ORDERS.iter().enumerate() {
                if a1 + a2 + b1 + b2 <= 3 {
                    c[idx(a1 + a2, b1 + b2)] += self.c[k1] * o.c[k2];
                }
            }
        }
        BiJet { c }
    }
}

impl Div for BiJet {
    type Output = BiJet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: BiJet) -> BiJet {
        self * o.recip()
    }
}
