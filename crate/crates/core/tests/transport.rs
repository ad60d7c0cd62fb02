use inflow_ns::fields::lq_norm;
use inflow_ns::geometry::Domain;
use inflow_ns::grid::Grid;
use inflow_ns::oracle::ExactTransport;
use inflow_ns::transport::*;
use proptest::prelude::*;

fn square(n: usize) -> Grid {
    Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), n, n).unwrap()
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

#[test]
fn damped_constant_source() {
    let g = square(64);
    let sol = solve_transport(&g, &Velocity::Zero, &vec![1.0; g.len()], |_| 0.0, true, &TraceOptions::default());
    let exact: Vec<f64> = g.x.iter().map(|x| 1.0 - (-x[0]).exp()).collect();
    assert!(max_err(&sol.w, &exact) <= 1e-6);
}

const C1: f64 = 0.2;
const K: f64 = 0.3;

fn drift(x: [f64; 2]) -> [f64; 2] {
    [C1, K * x[1]]
}

fn source(x: [f64; 2]) -> f64 {
    1.0 + (2.0 * x[0]).cos() * x[1] * x[1]
}

fn inflow(x: [f64; 2]) -> f64 {
    (std::f64::consts::PI * x[1]).sin()
}

fn drift_error(n: usize, nodal: bool) -> f64 {
    let g = square(n);
    let h: Vec<f64> = g.x.iter().map(|&x| source(x)).collect();
    let u: [Vec<f64>; 2] = [g.x.iter().map(|&x| drift(x)[0]).collect(), g.x.iter().map(|&x| drift(x)[1]).collect()];
    let f = drift;
    let vel = if nodal { Velocity::Nodal(&u) } else { Velocity::Func(&f) };
    let sol = solve_transport(&g, &vel, &h, inflow, false, &TraceOptions::default());
    let ex = ExactTransport { c1: C1, c2: 0.0, k: K, damped: false, h: &source, w_in: &inflow };
    let exact: Vec<f64> = g.x.iter().map(|&x| ex.eval(x)).collect();
    let e: Vec<f64> = sol.w.iter().zip(&exact).map(|(a, b)| a - b).collect();
    lq_norm(&g, &e, 2.0).unwrap()
}

#[test]
fn undamped_linear_drift_second_order() {
    for nodal in [false, true] {
        let e: Vec<f64> = [16, 32, 64].iter().map(|&n| drift_error(n, nodal)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "nodal {nodal}: {e:?}");
        }
    }
}

#[test]
fn lens_characteristics_reach_inflow() {
    let g = Grid::new(&Domain::lens(1.0, 1.0).unwrap(), 24, 24).unwrap();
    let op = TransportOperator::build(&g, &Velocity::Zero, false, &TraceOptions::default());
    assert_eq!(op.untraced(), 0);
    for k in 0..g.len() {
        if op.termination[k] == Termination::ReachedInflow {
            let f = op.feet[k];
            assert!((f[0] - g.domain.inflow.eval(f[1])).abs() <= 1e-12);
        }
    }
}

#[test]
fn singularity_conditions_on_lens() {
    let g = Grid::new(&Domain::lens(1.0, 1.0).unwrap(), 16, 16).unwrap();
    let z = [vec![0.0; g.len()], vec![0.0; g.len()]];
    let r = check_sing_conditions(&g, &z, |_| 0.0, 1.0);
    assert!(r.pass);
    let r = check_sing_conditions(&g, &z, |_| 0.1, 1.0);
    assert!(!r.pass_density);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operator_is_linear(a in prop::collection::vec(-1.0f64..1.0, 121), b in prop::collection::vec(-1.0f64..1.0, 121), c in -2.0f64..2.0) {
        let g = square(10);
        let u = [vec![0.05; g.len()], g.x.iter().map(|x| 0.05 * x[1] * (1.0 - x[1])).collect()];
        let op = TransportOperator::build(&g, &Velocity::Nodal(&u), true, &TraceOptions::default());
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| c * x + y).collect();
        let lhs = op.apply_source(&ab);
        let ra = op.apply_source(&a);
        let rb = op.apply_source(&b);
        for k in 0..g.len() {
            prop_assert!((lhs[k] - (c * ra[k] + rb[k])).abs() <= 1e-12);
        }
    }

    #[test]
    fn inflow_data_bounds_source_free_solution(lo in -1.0f64..0.0, hi in 0.0f64..1.0) {
        // with H = 0 the solution takes values of w_in only
        let g = Grid::new(&Domain::lens(1.0, 1.0).unwrap(), 12, 12).unwrap();
        let w_in = |x: [f64; 2]| lo + (hi - lo) * x[1];
        let sol = solve_transport(&g, &Velocity::Zero, &vec![0.0; g.len()], w_in, false, &TraceOptions::default());
        for v in sol.w {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}
