use rbfrk::analysis::{convergence_study, doubling, integrate, integrate_with, ErrorNorm, IntegrateOptions};
use rbfrk::problems::{benchmark_problems, ex61};
use rbfrk::tableau::catalog;

#[test]
fn halving_h_divides_endpoint_error_by_two_to_the_order() {
    let p = ex61();
    for m in catalog() {
        let t = convergence_study(&p, m, &[160, 320], ErrorNorm::Endpoint).unwrap();
        let ratio = t.rows[0].error / t.rows[1].error;
        let want = 2f64.powi(m.theoretical_order as i32);
        assert!((ratio / want - 1.0).abs() <= 0.15, "{}: ratio {ratio:.3} vs {want}", m.name);
    }
}

#[test]
fn grid_l1_and_endpoint_orders_agree() {
    let p = ex61();
    let ns = doubling(10, 6);
    for m in catalog() {
        let a = convergence_study(&p, m, &ns, ErrorNorm::Endpoint).unwrap();
        let b = convergence_study(&p, m, &ns, ErrorNorm::GridL1).unwrap();
        let (pa, pb) = (a.final_order().unwrap(), b.final_order().unwrap());
        assert!((pa - pb).abs() <= 0.1, "{}: endpoint {pa:.4} vs grid-l1 {pb:.4}", m.name);
    }
}

#[test]
fn integration_is_deterministic_and_trace_independent() {
    for p in benchmark_problems() {
        for m in catalog() {
            let n = if p.stiff_like { 400 } else { 20 };
            let a = integrate(&p, m, n).unwrap();
            let b = integrate(&p, m, n).unwrap();
            let traced = IntegrateOptions { collect_trace: true, ..Default::default() };
            let c = integrate_with(&p, m, n, &traced).unwrap();
            assert_eq!(a, b);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.states), bits(&c.states), "{} on {}", m.name, p.name);
            assert_eq!(c.traces.as_ref().map(Vec::len), m.is_rbf().then_some(n));
        }
    }
}

#[test]
fn traces_record_shape_parameters_each_step() {
    let p = ex61();
    let m = rbfrk::lookup("mq-rk2").unwrap();
    let opts = IntegrateOptions { collect_trace: true, ..Default::default() };
    let tr = integrate_with(&p, m, 10, &opts).unwrap();
    let traces = tr.traces.unwrap();
    // eps^2 = (f_t + f f_u) / u = 2 u^2 along the trajectory
    for (k, t) in traces.iter().enumerate() {
        let v = tr.states[k];
        assert!((t.shape.eps2_stage2 - 2.0 * v * v).abs() < 1e-14);
        assert!(!t.shape.fallback_used);
    }
}

#[test]
fn studies_are_independent_of_batching() {
    let p = ex61();
    let methods: Vec<_> = catalog().iter().collect();
    let ns = doubling(10, 4);
    let all = rbfrk::convergence_studies(&p, &methods, &ns, ErrorNorm::Max).unwrap();
    for (t, m) in all.iter().zip(&methods) {
        assert_eq!(*t, convergence_study(&p, m, &ns, ErrorNorm::Max).unwrap());
    }
}
