//! Method descriptions: exact Butcher tableaux, shape-parameter augmentation
//! and the catalog of every method the crate can step.
//!
//! Coefficients are held as exact rationals so that order-condition residuals
//! are computed without rounding. [`NumericTableau`] is the `f64` view used by
//! the steppers.

use std::fmt;
use std::sync::OnceLock;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Maximum number of stages of any tableau in this crate.
pub const MAX_STAGES: usize = 3;

/// Residual magnitude below which an order condition counts as satisfied.
pub const ORDER_CONDITION_TOL: f64 = 1e-14;

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn qi(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

/// Explicit Butcher tableau with two or three stages.
///
/// `a` is stored as a full square so that a non-explicit tableau can be
/// represented and rejected by [`validate_order_conditions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub stages: usize,
    pub a: [[Rational64; MAX_STAGES]; MAX_STAGES],
    pub b: [Rational64; MAX_STAGES],
    pub c: [Rational64; MAX_STAGES],
}

impl ButcherTableau {
    fn two_stage(a21: Rational64, b: [Rational64; 2]) -> Self {
        let z = Rational64::zero();
        ButcherTableau {
            stages: 2,
            a: [[z; 3], [a21, z, z], [z; 3]],
            b: [b[0], b[1], z],
            c: [z, a21, z],
        }
    }

    fn three_stage(c2: Rational64, a31: Rational64, a32: Rational64, b: [Rational64; 3]) -> Self {
        let z = Rational64::zero();
        ButcherTableau {
            stages: 3,
            a: [[z; 3], [c2, z, z], [a31, a32, z]],
            b,
            c: [z, c2, a31 + a32],
        }
    }

    /// One-parameter family of two-stage second-order methods, `c2 != 0`.
    pub fn rk2_family(c2: Rational64) -> Result<Self> {
        if c2.is_zero() {
            return Err(Error::InvalidParameter("rk2 family requires c2 != 0".into()));
        }
        let b2 = (qi(2) * c2).recip();
        Ok(Self::two_stage(c2, [qi(1) - b2, b2]))
    }

    /// Three-stage third-order family I, parameterised by the nodes `c2`, `c3`.
    ///
    /// Coefficients come from solving the order conditions directly:
    /// `b2 c2 + b3 c3 = 1/2`, `b2 c2^2 + b3 c3^2 = 1/3`, `a32 b3 c2 = 1/6`,
    /// then `a31 = c3 - a32` and `b1 = 1 - b2 - b3`.
    pub fn rk3_family_one(c2: Rational64, c3: Rational64) -> Result<Self> {
        if c2.is_zero() || c3.is_zero() || c2 == c3 || c2 == q(2, 3) {
            return Err(Error::InvalidParameter(format!(
                "rk3 family I requires c2 != 0, c2 != 2/3, c3 != 0, c2 != c3 (got c2 = {c2}, c3 = {c3})"
            )));
        }
        let b3 = (qi(2) - qi(3) * c2) / (qi(6) * c3 * (c3 - c2));
        let b2 = (qi(3) * c3 - qi(2)) / (qi(6) * c2 * (c3 - c2));
        let b1 = qi(1) - b2 - b3;
        let a32 = c3 * (c3 - c2) / (c2 * (qi(2) - qi(3) * c2));
        let a31 = c3 - a32;
        Ok(Self::three_stage(c2, a31, a32, [b1, b2, b3]))
    }

    /// Family II: `c2 = c3 = 2/3`, free weight `b3 != 0`.
    pub fn rk3_family_two(b3: Rational64) -> Result<Self> {
        if b3.is_zero() {
            return Err(Error::InvalidParameter("rk3 family II requires b3 != 0".into()));
        }
        let a32 = (qi(4) * b3).recip();
        Ok(Self::three_stage(q(2, 3), q(2, 3) - a32, a32, [q(1, 4), q(3, 4) - b3, b3]))
    }

    /// Family III: `c2 = 2/3`, `c3 = 0`, free weight `b3 != 0`.
    pub fn rk3_family_three(b3: Rational64) -> Result<Self> {
        if b3.is_zero() {
            return Err(Error::InvalidParameter("rk3 family III requires b3 != 0".into()));
        }
        let a32 = (qi(4) * b3).recip();
        Ok(Self::three_stage(q(2, 3), -a32, a32, [q(1, 4) - b3, q(3, 4), b3]))
    }

    pub fn to_numeric(&self) -> NumericTableau {
        let f = |r: &Rational64| r.to_f64().expect("small rational");
        let mut a = [[0.0; MAX_STAGES]; MAX_STAGES];
        for (dst, src) in a.iter_mut().zip(&self.a) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = f(s);
            }
        }
        NumericTableau {
            stages: self.stages,
            a,
            b: self.b.each_ref().map(f),
            c: self.c.each_ref().map(f),
        }
    }
}

/// Floating-point copy of a [`ButcherTableau`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericTableau {
    pub stages: usize,
    pub a: [[f64; MAX_STAGES]; MAX_STAGES],
    pub b: [f64; MAX_STAGES],
    pub c: [f64; MAX_STAGES],
}

/// RBF kernel attached to a stage correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Kernel {
    None,
    /// Multiquadric: the drifted stage state is scaled by `sqrt(1 + eps^2 c^2 h^2)`.
    Mq,
    /// Inverse multiquadric: `sqrt(rho) * drift + v_n / sqrt(rho)`.
    Imq,
}

/// Which shape-parameter formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseId {
    TwoStage,
    ThreeI,
    ThreeII,
    ThreeIII,
    ThreeIV,
}

/// Per-stage shape-parameter slots of an augmented tableau.
///
/// `eps_slots[i]` is the multiplier applied to the stage-2 shape parameter to
/// obtain stage `i`'s; slot 0 is always inert, slot 1 is 1 for RBF methods.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfAugmentation {
    pub kernel: Kernel,
    pub case_id: CaseId,
    pub eps_slots: [Rational64; MAX_STAGES],
}

impl RbfAugmentation {
    pub fn none(stages: usize) -> Self {
        RbfAugmentation {
            kernel: Kernel::None,
            case_id: if stages == 2 { CaseId::TwoStage } else { CaseId::ThreeI },
            eps_slots: [Rational64::zero(); MAX_STAGES],
        }
    }

    /// `eps3^2 / eps2^2` for three-stage methods.
    pub fn stage3_ratio(&self) -> Rational64 {
        self.eps_slots[2]
    }
}

/// A named method: tableau, augmentation and the order it should attain.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub tableau: ButcherTableau,
    pub augmentation: RbfAugmentation,
    pub theoretical_order: u8,
    /// Classical method with the same tableau (the `eps^2 = 0` reduction).
    pub baseline: Option<String>,
}

impl MethodSpec {
    pub fn kernel(&self) -> Kernel {
        self.augmentation.kernel
    }

    pub fn is_rbf(&self) -> bool {
        self.augmentation.kernel != Kernel::None
    }

    pub fn stages(&self) -> usize {
        self.tableau.stages
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn classical(name: &str, tableau: ButcherTableau) -> MethodSpec {
    let stages = tableau.stages;
    MethodSpec {
        name: name.to_string(),
        augmentation: RbfAugmentation::none(stages),
        theoretical_order: stages as u8,
        tableau,
        baseline: None,
    }
}

fn augmented(
    name: &str,
    baseline: &str,
    tableau: ButcherTableau,
    kernel: Kernel,
    case_id: CaseId,
    ratio: Rational64,
) -> MethodSpec {
    let stages = tableau.stages;
    let mut eps_slots = [Rational64::zero(); MAX_STAGES];
    eps_slots[1] = qi(1);
    if stages == 3 {
        eps_slots[2] = ratio;
    }
    MethodSpec {
        name: name.to_string(),
        augmentation: RbfAugmentation { kernel, case_id, eps_slots },
        theoretical_order: stages as u8 + 1,
        tableau,
        baseline: Some(baseline.to_string()),
    }
}

fn build_catalog() -> Vec<MethodSpec> {
    let rk2 = ButcherTableau::rk2_family(q(2, 3)).unwrap();
    // family-I node pairs of the four IMQ three-stage cases
    let rk3_i = ButcherTableau::rk3_family_one(q(1, 2), qi(1)).unwrap();
    let rk3_ii = ButcherTableau::rk3_family_one(q(1, 3), q(5, 6)).unwrap();
    let rk3_iii = ButcherTableau::rk3_family_one(qi(1), q(1, 2)).unwrap();
    let rk3_iv = ButcherTableau::rk3_family_one(q(1, 2), q(3, 4)).unwrap();

    vec![
        classical("rk2", rk2.clone()),
        classical("rk3-i", rk3_i.clone()),
        classical("rk3-ii", rk3_ii.clone()),
        classical("rk3-iii", rk3_iii.clone()),
        classical("rk3-iv", rk3_iv.clone()),
        classical("rk3-family-ii", ButcherTableau::rk3_family_two(q(3, 4)).unwrap()),
        classical("rk3-family-iii", ButcherTableau::rk3_family_three(q(3, 4)).unwrap()),
        augmented("mq-rk2", "rk2", rk2.clone(), Kernel::Mq, CaseId::TwoStage, qi(0)),
        augmented("imq-rk2", "rk2", rk2, Kernel::Imq, CaseId::TwoStage, qi(0)),
        augmented("mq-rk3-i", "rk3-ii", rk3_ii.clone(), Kernel::Mq, CaseId::ThreeI, q(-1, 5)),
        augmented("mq-rk3-ii", "rk3-iii", rk3_iii.clone(), Kernel::Mq, CaseId::ThreeII, qi(-1)),
        augmented("mq-rk3-iii", "rk3-iv", rk3_iv.clone(), Kernel::Mq, CaseId::ThreeIII, q(-1, 3)),
        augmented("imq-rk3-i", "rk3-i", rk3_i, Kernel::Imq, CaseId::ThreeI, qi(-1)),
        augmented("imq-rk3-ii", "rk3-ii", rk3_ii, Kernel::Imq, CaseId::ThreeII, q(-1, 5)),
        augmented("imq-rk3-iii", "rk3-iii", rk3_iii, Kernel::Imq, CaseId::ThreeIII, qi(-1)),
        augmented("imq-rk3-iv", "rk3-iv", rk3_iv, Kernel::Imq, CaseId::ThreeIV, q(-1, 3)),
    ]
}

/// Every method the crate knows, in a fixed order.
pub fn catalog() -> &'static [MethodSpec] {
    static CATALOG: OnceLock<Vec<MethodSpec>> = OnceLock::new();
    CATALOG.get_or_init(build_catalog)
}

/// Look a method up by its canonical name (case-insensitive).
pub fn lookup(name: &str) -> Result<&'static MethodSpec> {
    let wanted = name.trim().to_ascii_lowercase();
    catalog()
        .iter()
        .find(|m| m.name == wanted)
        .ok_or_else(|| Error::UnknownMethod(name.to_string()))
}

/// One order condition and its exact residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResidual {
    pub condition: String,
    /// Exact residual as a rational string, e.g. `"0"` or `"1/100"`.
    pub exact: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub method: String,
    pub conditions: Vec<ConditionResidual>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions.iter().map(|c| c.residual.abs()).fold(0.0, f64::max)
    }

    pub fn residual(&self, condition: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.condition == condition).map(|c| c.residual)
    }
}

/// Check consistency, order and (for three-stage RBF methods) shape-cancellation
/// conditions in exact rational arithmetic.
pub fn validate_order_conditions(spec: &MethodSpec) -> Result<ValidationReport> {
    let t = &spec.tableau;
    if t.stages != 2 && t.stages != 3 {
        return Err(Error::StageCount(t.stages));
    }
    for (i, row) in t.a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if j >= i && !v.is_zero() {
                return Err(Error::NotExplicit { row: i + 1, col: j + 1, value: v.to_string() });
            }
        }
    }

    let mut out = Vec::new();
    let mut push = |name: String, r: Rational64| {
        let residual = r.to_f64().unwrap_or(f64::INFINITY);
        out.push(ConditionResidual {
            condition: name,
            exact: r.to_string(),
            residual,
            passed: residual.abs() <= ORDER_CONDITION_TOL,
        });
    };

    let s = t.stages;
    let (b, c, a) = (&t.b, &t.c, &t.a);
    push("c1 = 0".into(), c[0]);
    push("sum b - 1".into(), b[..s].iter().copied().sum::<Rational64>() - qi(1));
    for i in 1..s {
        let row: Rational64 = a[i][..i].iter().copied().sum();
        push(format!("row {} sum - c{}", i + 1, i + 1), row - c[i]);
    }
    let bc: Rational64 = (1..s).map(|i| b[i] * c[i]).sum();
    push("sum b c - 1/2".into(), bc - q(1, 2));
    if s == 3 {
        push("b2 c2^2 + b3 c3^2 - 1/3".into(), b[1] * c[1] * c[1] + b[2] * c[2] * c[2] - q(1, 3));
        push("a32 b3 c2 - 1/6".into(), a[2][1] * b[2] * c[1] - q(1, 6));
        if spec.is_rbf() {
            let ratio = spec.augmentation.stage3_ratio();
            push(
                "b2 c2^2 + b3 c3^2 ratio".into(),
                b[1] * c[1] * c[1] + b[2] * c[2] * c[2] * ratio,
            );
        }
    }

    let passed = out.iter().all(|c| c.passed);
    Ok(ValidationReport { method: spec.name.clone(), conditions: out, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_unique_and_resolvable() {
        let names: Vec<_> = catalog().iter().map(|m| m.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        for n in names {
            assert_eq!(lookup(n).unwrap().name, n);
        }
        assert_eq!(lookup("MQ-RK2").unwrap().name, "mq-rk2");
        assert!(matches!(lookup("rk9"), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn every_entry_validates() {
        for m in catalog() {
            let r = validate_order_conditions(m).unwrap();
            assert!(r.passed, "{}: {:?}", m.name, r);
            assert_eq!(r.max_residual(), 0.0);
            assert!((2..=4).contains(&m.theoretical_order));
        }
    }

    #[test]
    fn mq_rk3_case_one_coefficients() {
        let m = lookup("mq-rk3-i").unwrap();
        let t = &m.tableau;
        assert_eq!(t.a[1][0], q(1, 3));
        assert_eq!(t.c[1], q(1, 3));
        assert_eq!(t.a[2][0], q(-5, 12));
        assert_eq!(t.a[2][1], q(5, 4));
        assert_eq!(t.c[2], q(5, 6));
        assert_eq!(t.b, [q(1, 10), q(1, 2), q(2, 5)]);
        assert_eq!(m.augmentation.stage3_ratio(), q(-1, 5));
    }

    #[test]
    fn imq_rk3_case_one_and_imq_rk2_coefficients() {
        let t = &lookup("imq-rk3-i").unwrap().tableau;
        assert_eq!((t.a[1][0], t.a[2][0], t.a[2][1], t.c[2]), (q(1, 2), qi(-1), qi(2), qi(1)));
        assert_eq!(t.b, [q(1, 6), q(2, 3), q(1, 6)]);
        assert_eq!(lookup("imq-rk3-i").unwrap().augmentation.stage3_ratio(), qi(-1));

        let t = &lookup("imq-rk2").unwrap().tableau;
        assert_eq!((t.a[1][0], t.c[1]), (q(2, 3), q(2, 3)));
        assert_eq!(&t.b[..2], &[q(1, 4), q(3, 4)]);
    }

    #[test]
    fn ralston_nodes_for_case_iv() {
        let t = &lookup("imq-rk3-iv").unwrap().tableau;
        assert_eq!(t.c[2], q(3, 4));
        assert_eq!(t.a[2][0], qi(0));
        assert_eq!(t.b, [q(2, 9), q(1, 3), q(4, 9)]);
        assert_eq!(lookup("mq-rk3-iii").unwrap().tableau, *t);
    }

    #[test]
    fn mq_case_one_shares_imq_case_two() {
        let mq = lookup("mq-rk3-i").unwrap();
        let imq = lookup("imq-rk3-ii").unwrap();
        assert_eq!(mq.tableau, imq.tableau);
        assert_eq!(mq.augmentation.stage3_ratio(), q(-1, 5));
        assert_eq!(imq.augmentation.stage3_ratio(), q(-1, 5));
    }

    #[test]
    fn cancellation_identity_case_one() {
        // 1/2 (1/3)^2 + 2/5 (5/6)^2 (-1/5) = 1/18 - 1/18
        let r = validate_order_conditions(lookup("mq-rk3-i").unwrap()).unwrap();
        assert_eq!(r.residual("b2 c2^2 + b3 c3^2 ratio"), Some(0.0));
    }

    #[test]
    fn perturbed_weight_fails_on_sum_b() {
        let mut m = lookup("rk2").unwrap().clone();
        m.tableau.b[1] += q(1, 100);
        let r = validate_order_conditions(&m).unwrap();
        assert!(!r.passed);
        assert_eq!(r.residual("sum b - 1"), Some(0.01));
    }

    #[test]
    fn rejects_implicit_tableau() {
        let mut m = lookup("rk3-i").unwrap().clone();
        m.tableau.a[0][1] = q(1, 2);
        assert!(matches!(
            validate_order_conditions(&m),
            Err(Error::NotExplicit { row: 1, col: 2, .. })
        ));
    }

    #[test]
    fn family_constructors_reject_forbidden_parameters() {
        assert!(ButcherTableau::rk2_family(qi(0)).is_err());
        assert!(ButcherTableau::rk3_family_one(q(2, 3), qi(1)).is_err());
        assert!(ButcherTableau::rk3_family_one(q(1, 2), q(1, 2)).is_err());
        assert!(ButcherTableau::rk3_family_two(qi(0)).is_err());
        assert!(ButcherTableau::rk3_family_three(qi(0)).is_err());
    }

    #[test]
    fn family_one_matches_kutta() {
        let t = ButcherTableau::rk3_family_one(q(1, 2), qi(1)).unwrap();
        assert_eq!(t.a[2][0], qi(-1));
        assert_eq!(t.a[2][1], qi(2));
        assert_eq!(t.b, [q(1, 6), q(2, 3), q(1, 6)]);
    }

    #[test]
    fn families_satisfy_conditions_across_parameters() {
        for (n2, n3) in [(1, 5), (1, 4), (3, 7), (5, 4), (7, 3)] {
            let t = ButcherTableau::rk3_family_one(q(n2, 4), q(n3, 4)).unwrap();
            let m = classical("tmp", t);
            assert!(validate_order_conditions(&m).unwrap().passed);
        }
        for b3 in [q(1, 3), q(3, 4), qi(2), q(-1, 2)] {
            let m = classical("f2", ButcherTableau::rk3_family_two(b3).unwrap());
            assert!(validate_order_conditions(&m).unwrap().passed);
            let m = classical("f3", ButcherTableau::rk3_family_three(b3).unwrap());
            assert!(validate_order_conditions(&m).unwrap().passed);
        }
        for c2 in [q(1, 2), qi(1), q(2, 3), q(-1, 3)] {
            let m = classical("r2", ButcherTableau::rk2_family(c2).unwrap());
            assert!(validate_order_conditions(&m).unwrap().passed);
        }
    }
}
