//! Multiquadric and inverse-multiquadric corrected Runge-Kutta steps.
//!
//! Each step evaluates a shape parameter `eps^2` from the jet at `(t_n, v_n)`
//! so that the leading local truncation term vanishes, then runs the stage
//! recursion with the stage states rescaled by `sqrt(1 + eps^2 c_i^2 h^2)`.
//!
//! Stage forms (drift `d_i = h sum_j a_ij k_j`, radicand `rho_i`):
//!
//! * MQ: `y_i = (v_n + d_i) sqrt(rho_i)`
//! * IMQ: `y_i = sqrt(rho_i) d_i + v_n / sqrt(rho_i)`
//!
//! When the shape parameter cannot be formed the whole step falls back to
//! `eps^2 = 0`, which is the classical step on the same tableau.

use serde::Serialize;

use crate::classical::{run_stages, StepInput};
use crate::error::{Error, Result};
use crate::jet::{Jet3, JetProvider};
use crate::scalar::Scalar;
use crate::tableau::{lookup, CaseId, Kernel, MethodSpec, NumericTableau, MAX_STAGES};

/// Relative size below which a shape-parameter denominator is degenerate:
/// `|den| < DENOM_TOL * max(1, |num|)`.
pub const DENOM_TOL: f64 = 1e-12;

/// Radicands `1 + eps^2 c^2 h^2` at or below this trigger the fallback.
pub const RADICAND_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FallbackReason {
    None,
    ZeroDenominator,
    NonFiniteJet,
    RadicandNonPositive,
}

impl FallbackReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FallbackReason::None => "none",
            FallbackReason::ZeroDenominator => "zero-denominator",
            FallbackReason::NonFiniteJet => "non-finite-jet",
            FallbackReason::RadicandNonPositive => "radicand-non-positive",
        }
    }
}

/// Shape parameters used by one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeParams {
    pub eps2_stage2: f64,
    pub eps2_stage3: Option<f64>,
    pub fallback_used: bool,
    pub reason: FallbackReason,
}

impl ShapeParams {
    fn fallback(stages: usize, reason: FallbackReason) -> Self {
        ShapeParams {
            eps2_stage2: 0.0,
            eps2_stage3: (stages == 3).then_some(0.0),
            fallback_used: true,
            reason,
        }
    }
}

/// Observational record of one RBF step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RbfStepTrace {
    pub shape: ShapeParams,
    /// State at which stage 2 evaluated `f`.
    pub v1: f64,
    /// State at which stage 3 evaluated `f` (three-stage methods).
    pub v2: Option<f64>,
    pub k: [f64; MAX_STAGES],
}

/// How the shape parameter of a step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeMode {
    /// Cancel the leading truncation term (the method as designed).
    Optimal,
    /// Use this `eps^2` for stage 2; stage 3 follows the case ratio.
    Fixed(f64),
}

/// Resolve `num / den`, rejecting near-zero denominators.
fn resolve<S: Scalar>(num: S, den: S) -> Result<S> {
    if den.abs() < DENOM_TOL * num.abs().max(1.0) {
        return Err(Error::DegenerateShape { numerator: num.abs(), denominator: den.abs() });
    }
    Ok(num / den)
}

/// Two-stage shape parameter.
///
/// MQ: `(f_t + f f_u) / u_n`. IMQ: `-(f_t + f f_u) / u_n`; the inverse
/// kernel perturbs the stage state with the opposite sign, so the
/// cancelling parameter flips.
pub fn eps2_two_stage<S: Scalar>(kernel: Kernel, jet: &Jet3<S>, u_n: S) -> Result<S> {
    let num = jet.f_t + jet.f * jet.f_u;
    match kernel {
        Kernel::Mq => resolve(num, u_n),
        Kernel::Imq => resolve(-num, u_n),
        Kernel::None => Ok(S::lift(0.0)),
    }
}

/// Fixed ratio `eps3^2 / eps2^2` of each three-stage case
/// (`b2 c2^2 + b3 c3^2 ratio = 0`).
pub fn case_ratio(kernel: Kernel, case_id: CaseId) -> Option<f64> {
    match (kernel, case_id) {
        (Kernel::Mq, CaseId::ThreeI) | (Kernel::Imq, CaseId::ThreeII) => Some(-1.0 / 5.0),
        (Kernel::Mq, CaseId::ThreeII) => Some(-1.0),
        (Kernel::Mq, CaseId::ThreeIII) => Some(-1.0 / 3.0),
        (Kernel::Imq, CaseId::ThreeI) | (Kernel::Imq, CaseId::ThreeIII) => Some(-1.0),
        (Kernel::Imq, CaseId::ThreeIV) => Some(-1.0 / 3.0),
        _ => None,
    }
}

/// Numerator and denominator of the three-stage `eps2^2` closed forms, with
/// `v` the current state `u_n`.
pub fn three_stage_fraction<S: Scalar>(
    kernel: Kernel,
    case_id: CaseId,
    jet: &Jet3<S>,
    v: S,
) -> Result<(S, S)> {
    let c = |x: f64| S::lift(x);
    let Jet3 { f, f_t, f_u, f_tt, f_tu, f_uu, f_ttt, f_ttu, f_tuu, f_uuu } = *jet;
    let fu2 = f_u * f_u;
    let fu3 = fu2 * f_u;
    let pair = match (kernel, case_id) {
        (Kernel::Mq, CaseId::ThreeI) => (
            f * f_t * f_uu - c(3.0) * f * fu3 - f * f_u * f_tu - c(3.0) * f_t * fu2 + f_t * f_tu
                - f_tt * f_u,
            v * f * f_uu - c(2.0) * v * fu2 + v * f_tu + f * f_u,
        ),
        (Kernel::Mq, CaseId::ThreeII) => (
            f * f_t * f_uu + f * fu3 - f * f_u * f_tu + f_t * fu2 + f_t * f_tu - f_tt * f_u,
            v * f * f_uu + c(2.0) * v * fu2 + v * f_tu + f * f_u,
        ),
        (Kernel::Mq, CaseId::ThreeIII) => (
            -c(1.0 / 3.0) * f * f * f * f_uuu - f * f * f_tuu - c(4.0) * f * fu3 - f * f_ttu
                - c(4.0) * f_t * fu2
                - c(1.0 / 3.0) * f_ttt,
            v * f * f_uu - c(4.0) * v * fu2 + v * f_tu + f * f_u,
        ),
        (Kernel::Imq, CaseId::ThreeI) => (
            -f * f * f_u * f_uu - f * f_t * f_uu + f * fu3 - f * f_u * f_tu + f_t * fu2
                - f_t * f_tu,
            v * f * f_uu - v * fu2 + v * f_tu - f * f_u,
        ),
        (Kernel::Imq, CaseId::ThreeII) => (
            -f * f_t * f_uu + c(3.0) * f * fu3 + f * f_u * f_tu + c(3.0) * f_t * fu2 - f_t * f_tu
                + f_tt * f_u,
            v * f * f_uu - c(2.0) * v * fu2 + v * f_tu - f * f_u,
        ),
        (Kernel::Imq, CaseId::ThreeIII) => (
            -f * f_t * f_uu - f * fu3 + f * f_u * f_tu - f_t * fu2 - f_t * f_tu + f_tt * f_u,
            v * f * f_uu + c(2.0) * v * fu2 + v * f_tu - f * f_u,
        ),
        (Kernel::Imq, CaseId::ThreeIV) => (
            c(1.0 / 3.0) * f * f * f * f_uuu + f * f * f_tuu + c(4.0) * f * fu3 + f * f_ttu
                + c(4.0) * f_t * fu2
                + c(1.0 / 3.0) * f_ttt,
            v * f * f_uu - c(4.0) * v * fu2 + v * f_tu - f * f_u,
        ),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no three-stage shape formula for {kernel:?} {case_id:?}"
            )))
        }
    };
    Ok(pair)
}

/// Three-stage shape parameters `(eps2^2, eps3^2)` with the case's fixed ratio.
pub fn eps2_three_stage<S: Scalar>(
    kernel: Kernel,
    case_id: CaseId,
    jet: &Jet3<S>,
    u_n: S,
) -> Result<(S, S)> {
    let ratio = case_ratio(kernel, case_id).ok_or_else(|| {
        Error::InvalidParameter(format!("case {case_id:?} is not defined for {kernel:?}"))
    })?;
    let (num, den) = three_stage_fraction(kernel, case_id, jet, u_n)?;
    let e2 = resolve(num, den)?;
    Ok((e2, S::lift(ratio) * e2))
}

/// Stage-2 and stage-3 shape parameters of `method` from a jet.
pub(crate) fn shape_for<S: Scalar>(method: &MethodSpec, jet: &Jet3<S>, u_n: S) -> Result<(S, S)> {
    let aug = &method.augmentation;
    match (aug.kernel, method.stages()) {
        (Kernel::None, _) => Ok((S::lift(0.0), S::lift(0.0))),
        (k, 2) => Ok((eps2_two_stage(k, jet, u_n)?, S::lift(0.0))),
        (k, _) => eps2_three_stage(k, aug.case_id, jet, u_n),
    }
}

/// Stage radicands `1 + eps_i^2 c_i^2 h^2` (stage 1 is inert).
pub(crate) fn radicands<S: Scalar>(tab: &NumericTableau, e2: S, e3: S, h: f64) -> [S; MAX_STAGES] {
    let one = S::lift(1.0);
    let r = |e: S, c: f64| one + e * S::lift(c * c * h * h);
    [one, r(e2, tab.c[1]), r(e3, tab.c[2])]
}

fn stage_ratio(method: &MethodSpec) -> f64 {
    if method.stages() == 3 {
        case_ratio(method.kernel(), method.augmentation.case_id).unwrap_or(0.0)
    } else {
        0.0
    }
}

/// One step of an RBF method from the catalog.
pub fn rbf_step(
    method: &MethodSpec,
    rhs: &JetProvider,
    input: StepInput,
    mode: ShapeMode,
) -> Result<(f64, RbfStepTrace)> {
    if !method.is_rbf() {
        return Err(Error::InvalidParameter(format!("`{}` is not an RBF method", method.name)));
    }
    let tab = method.tableau.to_numeric();
    let stages = tab.stages;
    let StepInput { t_n, v_n, h } = input;

    let chosen: std::result::Result<(f64, f64), FallbackReason> = match mode {
        ShapeMode::Fixed(e2) => Ok((e2, stage_ratio(method) * e2)),
        ShapeMode::Optimal => match rhs.jet(t_n, v_n) {
            Ok(jet) if jet.is_finite() => match shape_for(method, &jet, v_n) {
                Ok((e2, e3)) if e2.is_finite() && e3.is_finite() => Ok((e2, e3)),
                _ => Err(FallbackReason::ZeroDenominator),
            },
            _ => Err(FallbackReason::NonFiniteJet),
        },
    };

    let mut shape = match chosen {
        Ok((e2, e3)) => ShapeParams {
            eps2_stage2: e2,
            eps2_stage3: (stages == 3).then_some(e3),
            fallback_used: false,
            reason: FallbackReason::None,
        },
        Err(reason) => ShapeParams::fallback(stages, reason),
    };
    let mut rho = radicands(&tab, shape.eps2_stage2, shape.eps2_stage3.unwrap_or(0.0), h);
    if rho[1..stages].iter().any(|r| r.below_floor(RADICAND_FLOOR)) {
        shape = ShapeParams::fallback(stages, FallbackReason::RadicandNonPositive);
        rho = [1.0; MAX_STAGES];
    }

    let run = run_stages(&tab, method.kernel(), rho, |t, u| rhs.f(t, u), t_n, v_n, h)?;
    let trace = RbfStepTrace {
        shape,
        v1: run.states[1],
        v2: (stages == 3).then_some(run.states[2]),
        k: run.k,
    };
    Ok((run.value, trace))
}

fn named_step(name: &str, jet: &JetProvider, input: StepInput) -> Result<(f64, RbfStepTrace)> {
    rbf_step(lookup(name)?, jet, input, ShapeMode::Optimal)
}

/// Two-stage MQ step (`a21 = c2 = 2/3`, `b = (1/4, 3/4)`).
pub fn mq_rk2_step(jet: &JetProvider, input: StepInput) -> Result<(f64, RbfStepTrace)> {
    named_step("mq-rk2", jet, input)
}

/// Two-stage IMQ step (`a21 = c2 = 2/3`, `b = (1/4, 3/4)`).
pub fn imq_rk2_step(jet: &JetProvider, input: StepInput) -> Result<(f64, RbfStepTrace)> {
    named_step("imq-rk2", jet, input)
}

fn case_suffix(case_id: CaseId) -> Result<&'static str> {
    match case_id {
        CaseId::ThreeI => Ok("i"),
        CaseId::ThreeII => Ok("ii"),
        CaseId::ThreeIII => Ok("iii"),
        CaseId::ThreeIV => Ok("iv"),
        CaseId::TwoStage => Err(Error::InvalidParameter("two-stage case has no rk3 step".into())),
    }
}

/// Three-stage MQ step, cases I-III.
pub fn mq_rk3_step(case_id: CaseId, jet: &JetProvider, input: StepInput) -> Result<(f64, RbfStepTrace)> {
    named_step(&format!("mq-rk3-{}", case_suffix(case_id)?), jet, input)
}

/// Three-stage IMQ step, cases I-IV.
pub fn imq_rk3_step(case_id: CaseId, jet: &JetProvider, input: StepInput) -> Result<(f64, RbfStepTrace)> {
    named_step(&format!("imq-rk3-{}", case_suffix(case_id)?), jet, input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::classical_step;
    use crate::problems::{dahlquist, ex61, ex62};
    use crate::tableau::catalog;
    use num_traits::ToPrimitive;

    fn input(t: f64, v: f64, h: f64) -> StepInput {
        StepInput::new(t, v, h).unwrap()
    }

    #[test]
    fn two_stage_shape_values() {
        let j = ex61().jet.jet(0.0, 1.0).unwrap();
        assert_eq!(eps2_two_stage(Kernel::Mq, &j, 1.0).unwrap(), 2.0);
        assert_eq!(eps2_two_stage(Kernel::Imq, &j, 1.0).unwrap(), -2.0);
        for (lam, u) in [(-1.5, 0.3), (2.0, -4.0)] {
            let j = Jet3::linear(lam, u);
            let e = eps2_two_stage(Kernel::Mq, &j, u).unwrap();
            assert!((e - lam * lam).abs() < 1e-14);
        }
        assert!(matches!(eps2_two_stage(Kernel::Mq, &j, 0.0), Err(Error::DegenerateShape { .. })));
    }

    #[test]
    fn imq_case_one_on_linear_problem() {
        // frozen from the symbolic reduction: num = -lambda^4 u, den = 2 lambda^2 u
        for (lam, u) in [(-1.0, 1.0), (0.5, 2.0), (3.0, -0.7)] {
            let (e2, e3) =
                eps2_three_stage(Kernel::Imq, CaseId::ThreeI, &Jet3::linear(lam, u), u).unwrap();
            assert!((e2 + lam * lam / 2.0).abs() < 1e-14);
            assert_eq!(e3, -e2);
        }
    }

    #[test]
    fn zero_rhs_is_degenerate_for_every_case() {
        let z = Jet3::<f64>::zero();
        for m in catalog().iter().filter(|m| m.is_rbf() && m.stages() == 3) {
            let r = eps2_three_stage(m.kernel(), m.augmentation.case_id, &z, 1.0);
            assert!(matches!(r, Err(Error::DegenerateShape { .. })), "{}", m.name);
        }
    }

    #[test]
    fn ratios_agree_with_catalog_slots() {
        for m in catalog().iter().filter(|m| m.is_rbf() && m.stages() == 3) {
            let r = case_ratio(m.kernel(), m.augmentation.case_id).unwrap();
            assert_eq!(r, m.augmentation.stage3_ratio().to_f64().unwrap(), "{}", m.name);
        }
        assert_eq!(case_ratio(Kernel::Mq, CaseId::ThreeIV), None);
    }

    #[test]
    fn forced_zero_shape_reduces_to_classical() {
        let p = ex61();
        let inp = input(0.0, 1.0, 0.1);
        let base = classical_step(&lookup("rk2").unwrap().tableau.to_numeric(), &p.jet, inp).unwrap();
        let (v, tr) = rbf_step(lookup("mq-rk2").unwrap(), &p.jet, inp, ShapeMode::Fixed(0.0)).unwrap();
        assert_eq!(v.to_bits(), base.to_bits());
        assert!(!tr.shape.fallback_used);
        let (v, _) = rbf_step(lookup("imq-rk2").unwrap(), &p.jet, inp, ShapeMode::Fixed(0.0)).unwrap();
        assert_eq!(v.to_bits(), base.to_bits());
    }

    #[test]
    fn mq_rk2_with_fixed_shape_matches_high_precision_value() {
        // 60-digit evaluation of the stage formulas with eps^2 = 2
        let (v, _) =
            rbf_step(lookup("mq-rk2").unwrap(), &ex61().jet, input(0.0, 1.0, 0.1), ShapeMode::Fixed(2.0))
                .unwrap();
        assert!((v - 0.909_085_925_925_925_925_9).abs() < 2e-16, "{v:.17}");
        // the natural shape parameter at (0, 1) is also 2
        let (w, tr) = mq_rk2_step(&ex61().jet, input(0.0, 1.0, 0.1)).unwrap();
        assert_eq!(tr.shape.eps2_stage2, 2.0);
        assert_eq!(v, w);
    }

    #[test]
    fn imq_rk2_matches_high_precision_value() {
        let (v, tr) = imq_rk2_step(&ex61().jet, input(0.0, 1.0, 0.1)).unwrap();
        assert_eq!(tr.shape.eps2_stage2, -2.0);
        assert!((v - 0.908_996_983_889_719_315_7).abs() < 2e-16, "{v:.17}");
    }

    #[test]
    fn three_stage_single_steps_match_high_precision_values() {
        let (v, tr) = mq_rk3_step(CaseId::ThreeI, &ex61().jet, input(0.0, 1.0, 0.1)).unwrap();
        assert_eq!(tr.shape.eps2_stage2, 6.0);
        assert!((v - 0.909_093_807_234_328_132_1).abs() < 2e-16, "{v:.17}");
        let (v, tr) = imq_rk3_step(CaseId::ThreeI, &ex61().jet, input(0.0, 1.0, 0.1)).unwrap();
        assert_eq!(tr.shape.eps2_stage2, -1.0);
        assert!((v - 0.909_087_905_386_590_641_0).abs() < 2e-16, "{v:.17}");
        assert!(mq_rk3_step(CaseId::ThreeIV, &ex61().jet, input(0.0, 1.0, 0.1)).is_err());
        assert!(imq_rk3_step(CaseId::TwoStage, &ex61().jet, input(0.0, 1.0, 0.1)).is_err());
    }

    #[test]
    fn mq_rk2_linear_amplification() {
        let z: f64 = -0.1;
        let (v, _) = mq_rk2_step(&dahlquist(-1.0).jet, input(0.0, 1.0, 0.1)).unwrap();
        let want = 1.0 + z / 4.0 + 0.75 * z * (1.0 + 2.0 * z / 3.0) * (1.0 + 4.0 * z * z / 9.0).sqrt();
        assert!((v - want).abs() < 1e-15);
        assert!((want - 0.904_844_616_900_926_428).abs() < 1e-15);
    }

    #[test]
    fn degenerate_state_falls_back_to_classical() {
        // u_n = 0 makes every denominator vanish
        let p = ex61();
        for m in catalog().iter().filter(|m| m.is_rbf()) {
            let inp = input(0.2, 0.0, 0.1);
            let (v, tr) = rbf_step(m, &p.jet, inp, ShapeMode::Optimal).unwrap();
            assert!(tr.shape.fallback_used, "{}", m.name);
            assert_eq!(tr.shape.reason, FallbackReason::ZeroDenominator);
            assert_eq!(tr.shape.eps2_stage2, 0.0);
            let base = lookup(m.baseline.as_deref().unwrap()).unwrap();
            let b = classical_step(&base.tableau.to_numeric(), &p.jet, inp).unwrap();
            assert_eq!(v.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn negative_radicand_falls_back() {
        let m = lookup("imq-rk2").unwrap();
        let inp = input(0.0, 1.0, 1.0);
        // 1 + eps^2 (4/9) h^2 <= 0 for eps^2 = -3
        let (_, tr) = rbf_step(m, &ex61().jet, inp, ShapeMode::Fixed(-3.0)).unwrap();
        assert_eq!(tr.shape.reason, FallbackReason::RadicandNonPositive);
        assert!(tr.shape.fallback_used);
    }

    #[test]
    fn singular_jet_falls_back() {
        let failing = JetProvider::analytic(|_, u| -u, |t, u| Err(Error::Singular { t, u }));
        let nan = JetProvider::analytic(|_, u| -u, |_, _| Ok(Jet3::<f64>::zero().map(|_| f64::NAN)));
        for p in [failing, nan] {
            let (_, tr) =
                rbf_step(lookup("imq-rk3-ii").unwrap(), &p, input(0.0, 1.0, 0.01), ShapeMode::Optimal).unwrap();
            assert_eq!(tr.shape.reason, FallbackReason::NonFiniteJet);
            assert_eq!(tr.shape.eps2_stage3, Some(0.0));
        }
    }

    #[test]
    fn traces_obey_ratio_and_cancellation() {
        let p = ex62();
        for m in catalog().iter().filter(|m| m.is_rbf() && m.stages() == 3) {
            let tab = m.tableau.to_numeric();
            let ratio = case_ratio(m.kernel(), m.augmentation.case_id).unwrap();
            for k in 0..40 {
                let t = -10.0 + 0.25 * k as f64;
                let u = p.exact_at(t).unwrap();
                let (_, tr) = rbf_step(m, &p.jet, input(t, u, 0.01), ShapeMode::Optimal).unwrap();
                if tr.shape.fallback_used {
                    continue;
                }
                let (e2, e3) = (tr.shape.eps2_stage2, tr.shape.eps2_stage3.unwrap());
                assert_eq!(e3, ratio * e2);
                let s = tab.b[1] * tab.c[1] * tab.c[1] * e2 + tab.b[2] * tab.c[2] * tab.c[2] * e3;
                let scale = (tab.b[1] * tab.c[1] * tab.c[1] * e2).abs().max(1e-300);
                assert!(s.abs() <= 1e-12 * scale, "{} {s}", m.name);
            }
        }
    }
}
