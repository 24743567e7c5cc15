//! Benchmark initial value problems with closed-form solutions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{BiJet, Jet3, JetProvider};

type ExactFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Scalar IVP `u' = f(t, u)`, `u(t0) = u0`, integrated over `[t0, t_end]`.
#[derive(Clone)]
pub struct OdeProblem {
    pub name: String,
    pub jet: JetProvider,
    pub t0: f64,
    pub t_end: f64,
    pub u0: f64,
    pub exact: Option<Arc<ExactFn>>,
    /// Rapidly varying solution; large step counts are expected.
    pub stiff_like: bool,
}

impl OdeProblem {
    pub fn exact_at(&self, t: f64) -> Option<f64> {
        self.exact.as_ref().map(|e| e(t))
    }
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("u0", &self.u0)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// Names accepted by [`problem_by_name`].
pub const PROBLEM_NAMES: [&str; 4] = ["ex61", "ex62", "ex63", "dahlquist"];

fn ex61_f(_t: f64, u: f64) -> f64 {
    -u * u
}

fn ex61_jet(t: f64, u: f64) -> Result<Jet3> {
    let mut j = Jet3::zero();
    j.f = ex61_f(t, u);
    j.f_u = -2.0 * u;
    j.f_uu = -2.0;
    Ok(j)
}

fn ex62_f(t: f64, u: f64) -> f64 {
    -4.0 * t * t * t * u * u
}

fn ex62_jet(t: f64, u: f64) -> Result<Jet3> {
    let (t2, t3, u2) = (t * t, t * t * t, u * u);
    Ok(Jet3 {
        f: -4.0 * t3 * u2,
        f_t: -12.0 * t2 * u2,
        f_u: -8.0 * t3 * u,
        f_tt: -24.0 * t * u2,
        f_tu: -24.0 * t2 * u,
        f_uu: -8.0 * t3,
        f_ttt: -24.0 * u2,
        f_ttu: -48.0 * t * u,
        f_tuu: -24.0 * t2,
        f_uuu: 0.0,
    })
}

fn ex63_expr<T>(t: T, u: T) -> T
where
    T: Copy
        + From<f64>
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>,
{
    (T::from(2.0) * t * t - u) / (t * t * u - t)
}

fn ex63_f(t: f64, u: f64) -> f64 {
    ex63_expr(t, u)
}

fn ex63_jet(t: f64, u: f64) -> Result<Jet3> {
    if t * t * u - t == 0.0 {
        return Err(Error::Singular { t, u });
    }
    Ok(ex63_expr(BiJet::var_t(t), BiJet::var_u(u)).to_jet())
}

/// `u' = -u^2` on `(0, 1]`, `u(0) = 1`, exact `1/(t + 1)`.
pub fn ex61() -> OdeProblem {
    OdeProblem {
        name: "ex61".into(),
        jet: JetProvider::analytic(ex61_f, ex61_jet),
        t0: 0.0,
        t_end: 1.0,
        u0: 1.0,
        exact: Some(Arc::new(|t| 1.0 / (t + 1.0))),
        stiff_like: false,
    }
}

/// `u' = -4 t^3 u^2` on `(-10, 0]`, `u(-10) = 1/10001`, exact `1/(t^4 + 1)`.
pub fn ex62() -> OdeProblem {
    OdeProblem {
        name: "ex62".into(),
        jet: JetProvider::analytic(ex62_f, ex62_jet),
        t0: -10.0,
        t_end: 0.0,
        u0: 1.0 / 10001.0,
        exact: Some(Arc::new(|t| 1.0 / (t.powi(4) + 1.0))),
        stiff_like: true,
    }
}

/// `u' = (2t^2 - u)/(t^2 u - t)` on `(1, 2]`, `u(1) = 2`,
/// exact `1/t + sqrt(1/t^2 + 4t - 4)`.
pub fn ex63() -> OdeProblem {
    OdeProblem {
        name: "ex63".into(),
        jet: JetProvider::analytic(ex63_f, ex63_jet),
        t0: 1.0,
        t_end: 2.0,
        u0: 2.0,
        exact: Some(Arc::new(|t| 1.0 / t + (1.0 / (t * t) + 4.0 * t - 4.0).sqrt())),
        stiff_like: false,
    }
}

/// Linear test equation `u' = lambda u` on `[0, 1]`, `u(0) = 1`.
pub fn dahlquist(lambda: f64) -> OdeProblem {
    OdeProblem {
        name: "dahlquist".into(),
        jet: JetProvider::analytic(move |_t, u| lambda * u, move |_t, u| Ok(Jet3::linear(lambda, u))),
        t0: 0.0,
        t_end: 1.0,
        u0: 1.0,
        exact: Some(Arc::new(move |t| (lambda * t).exp())),
        stiff_like: false,
    }
}

/// The three tabulated examples plus `dahlquist(-1)`.
pub fn benchmark_problems() -> Vec<OdeProblem> {
    vec![ex61(), ex62(), ex63(), dahlquist(-1.0)]
}

/// Resolve a problem by name; `lambda` is only used by `dahlquist`.
pub fn problem_by_name(name: &str, lambda: f64) -> Result<OdeProblem> {
    match name.trim().to_ascii_lowercase().as_str() {
        "ex61" => Ok(ex61()),
        "ex62" => Ok(ex62()),
        "ex63" => Ok(ex63()),
        "dahlquist" => Ok(dahlquist(lambda)),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// Analytic jet providers for the three tabulated examples.
pub fn analytic_jets_for_benchmarks() -> BTreeMap<&'static str, JetProvider> {
    BTreeMap::from([("ex61", ex61().jet), ("ex62", ex62().jet), ("ex63", ex63().jet)])
}
