//! Explicit stage recursion shared by the classical and RBF-corrected steps.

use crate::error::{Error, Result};
use crate::jet::JetProvider;
use crate::scalar::Scalar;
use crate::tableau::{Kernel, NumericTableau, MAX_STAGES};

/// One step request: advance `v_n` at `t_n` by `h > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput {
    pub t_n: f64,
    pub v_n: f64,
    pub h: f64,
}

impl StepInput {
    pub fn new(t_n: f64, v_n: f64, h: f64) -> Result<Self> {
        if h <= 0.0 || !h.is_finite() || !t_n.is_finite() || !v_n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step input must be finite with h > 0 (t = {t_n}, v = {v_n}, h = {h})"
            )));
        }
        Ok(StepInput { t_n, v_n, h })
    }
}

/// Stage slopes and stage states of one step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StageRun<S> {
    pub value: S,
    pub k: [S; MAX_STAGES],
    pub states: [S; MAX_STAGES],
}

/// State at which stage `i > 1` evaluates `f`, given the drift
/// `h * sum_j a_ij k_j` and the stage radicand `rho`.
#[inline]
fn stage_state<S: Scalar>(kernel: Kernel, v: S, drift: S, rho: S) -> S {
    match kernel {
        Kernel::None => v + drift,
        Kernel::Mq => (v + drift) * rho.sqrt(),
        Kernel::Imq => {
            let r = rho.sqrt();
            r * drift + v / r
        }
    }
}

/// Run the stages of `tab`. `rho[i]` is the radicand of stage `i` (ignored for
/// `Kernel::None`; `1` leaves the stage uncorrected).
pub(crate) fn run_stages<S: Scalar>(
    tab: &NumericTableau,
    kernel: Kernel,
    rho: [S; MAX_STAGES],
    mut f: impl FnMut(f64, S) -> S,
    t: f64,
    v: S,
    h: f64,
) -> Result<StageRun<S>> {
    let zero = S::lift(0.0);
    let hs = S::lift(h);
    let mut k = [zero; MAX_STAGES];
    let mut states = [zero; MAX_STAGES];
    states[0] = v;
    k[0] = f(t, v);
    if !k[0].is_finite() {
        return Err(Error::NonFiniteStage { stage: 1 });
    }
    for i in 1..tab.stages {
        let mut acc = zero;
        for j in 0..i {
            acc = acc + S::lift(tab.a[i][j]) * k[j];
        }
        let y = stage_state(kernel, v, hs * acc, rho[i]);
        states[i] = y;
        k[i] = f(t + tab.c[i] * h, y);
        if !y.is_finite() || !k[i].is_finite() {
            return Err(Error::NonFiniteStage { stage: i + 1 });
        }
    }
    let mut acc = zero;
    for i in 0..tab.stages {
        acc = acc + S::lift(tab.b[i]) * k[i];
    }
    let value = v + hs * acc;
    if !value.is_finite() {
        return Err(Error::NonFiniteStage { stage: tab.stages });
    }
    Ok(StageRun { value, k, states })
}

/// `v_{n+1} = v_n + h sum_i b_i k_i` for an explicit tableau. Only `f` is
/// evaluated; the jet is not touched.
pub fn classical_step(tableau: &NumericTableau, rhs: &JetProvider, input: StepInput) -> Result<f64> {
    let one = [1.0; MAX_STAGES];
    run_stages(tableau, Kernel::None, one, |t, u| rhs.f(t, u), input.t_n, input.v_n, input.h)
        .map(|r| r.value)
}
