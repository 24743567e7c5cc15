mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use rbfrk::classical::{classical_step, StepInput};
use rbfrk::jet::Jet3;
use rbfrk::problems::{dahlquist, ex61, ex62};
use rbfrk::rbf::{case_ratio, eps2_two_stage, rbf_step, three_stage_fraction, ShapeMode};
use rbfrk::stability::{amplification, stability_methods, AmplificationSpec};
use rbfrk::tableau::{catalog, lookup, Kernel};

fn jet_strategy() -> impl Strategy<Value = (Jet3, f64)> {
    (prop::array::uniform10(-1.0f64..1.0), 0.5f64..2.0, any::<bool>())
        .prop_map(|(e, m, neg)| (Jet3::from_entries(e), if neg { -m } else { m }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_shape_reduces_to_baseline(t in 0.1f64..10.0, v in 0.1f64..10.0, h in 1e-4f64..0.5) {
        let p = ex62();
        let inp = StepInput::new(t, v, h).unwrap();
        for m in catalog().iter().filter(|m| m.is_rbf()) {
            let base = lookup(m.baseline.as_deref().unwrap()).unwrap().tableau.to_numeric();
            let (a, _) = rbf_step(m, &p.jet, inp, ShapeMode::Fixed(0.0)).unwrap();
            let b = classical_step(&base, &p.jet, inp).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits(), "{}", m.name);
        }
    }

    #[test]
    fn three_stage_formulas_cancel_the_leading_term((jet, u0) in jet_strategy()) {
        for m in catalog().iter().filter(|m| m.is_rbf() && m.stages() == 3) {
            let ratio = case_ratio(m.kernel(), m.augmentation.case_id).unwrap();
            let (num, den) = three_stage_fraction(m.kernel(), m.augmentation.case_id, &jet, u0).unwrap();
            let (oracle, lower, slope) = common::oracle_shape(m, &jet, u0, ratio);
            prop_assert!(lower <= 1e-13);
            if den.abs() > 1e-3 && slope.abs() > 1e-6 {
                let gap = (num / den - oracle).abs() / oracle.abs().max(1e-300);
                prop_assert!(gap <= 1e-9, "{}: {} vs {}", m.name, num / den, oracle);
            }
        }
    }

    #[test]
    fn two_stage_formulas_cancel_the_leading_term((jet, u0) in jet_strategy()) {
        for m in catalog().iter().filter(|m| m.is_rbf() && m.stages() == 2) {
            let e = eps2_two_stage(m.kernel(), &jet, u0).unwrap();
            let (oracle, lower, _) = common::oracle_shape(m, &jet, u0, 0.0);
            prop_assert!(lower <= 1e-13);
            prop_assert!((e - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()), "{}: {} vs {}", m.name, e, oracle);
        }
    }

    #[test]
    fn shape_parameters_are_recomputed_from_the_current_state(v in 0.2f64..3.0, h in 1e-3f64..0.2) {
        // on -u^2 the MQ two-stage shape is 2 v^2 and the IMQ one -2 v^2
        let p = ex61();
        let inp = StepInput::new(0.0, v, h).unwrap();
        let (_, mq) = rbf_step(lookup("mq-rk2").unwrap(), &p.jet, inp, ShapeMode::Optimal).unwrap();
        let (_, imq) = rbf_step(lookup("imq-rk2").unwrap(), &p.jet, inp, ShapeMode::Optimal).unwrap();
        prop_assert!((mq.shape.eps2_stage2 - 2.0 * v * v).abs() <= 1e-14 * v * v);
        prop_assert!((imq.shape.eps2_stage2 + 2.0 * v * v).abs() <= 1e-14 * v * v);
    }

    #[test]
    fn amplification_is_conjugate_symmetric(re in -3.0f64..1.0, im in -3.0f64..3.0) {
        let z = Complex64::new(re, im);
        for m in stability_methods() {
            let s = AmplificationSpec::exact(&m).unwrap();
            if let (Ok(a), Ok(b)) = (amplification(&s, z), amplification(&s, z.conj())) {
                prop_assert!((a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm()), "{} at {}", m, z);
            }
        }
    }

    #[test]
    fn linear_steps_match_exact_amplification(lam in -3.0f64..-0.1, h in 0.01f64..0.5) {
        // a real step on u' = lambda u is R(lambda h) in exact mode
        let p = dahlquist(lam);
        let inp = StepInput::new(0.0, 1.0, h).unwrap();
        for m in catalog() {
            let (v, _) = rbfrk::analysis::step(m, &p.jet, inp, ShapeMode::Optimal).unwrap();
            let r = amplification(&AmplificationSpec::exact(&m.name).unwrap(), Complex64::new(lam * h, 0.0));
            if let Ok(r) = r {
                if m.kernel() == Kernel::None || r.im == 0.0 {
                    prop_assert!((v - r.re).abs() <= 1e-12, "{}: {} vs {}", m.name, v, r);
                }
            }
        }
    }
}
