use inflow_ns::diff::DiffOps;
use inflow_ns::fields::*;
use inflow_ns::geometry::Domain;
use inflow_ns::grid::Grid;
use inflow_ns::oracle::{linear_field_square_seminorm_p, naive_seminorm};
use proptest::prelude::*;

fn square(n: usize) -> Grid {
    Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), n, n).unwrap()
}

fn smooth(g: &Grid) -> Vec<f64> {
    g.x.iter().map(|x| (3.0 * x[0]).sin() * x[1] + 0.2 * x[0] * x[0]).collect()
}

#[test]
fn tiled_sum_matches_double_loop() {
    for dom in [Domain::rectangle(1.0, 1.0).unwrap(), Domain::lens(1.0, 1.0).unwrap()] {
        let g = Grid::new(&dom, 12, 12).unwrap();
        let f = smooth(&g);
        for (s, p) in [(0.3, 8.0), (0.5, 5.0), (0.7, 4.0)] {
            for eps in [0.0, 1e-6] {
                let np = NormParams::new(s, p, eps).unwrap();
                let fast = seminorm(&g, &f, &np);
                let slow = naive_seminorm(&g, &f, s, p, eps);
                assert!((fast - slow).abs() <= 1e-12 * slow, "{s} {p} {eps}: {fast} vs {slow}");
            }
        }
    }
}

#[test]
fn constant_fields_vanish() {
    let g = Grid::new(&Domain::lens(1.0, 1.0).unwrap(), 10, 10).unwrap();
    let np = NormParams::new(0.5, 5.0, 1e-6).unwrap();
    assert_eq!(seminorm(&g, &vec![2.5; g.len()], &np), 0.0);
}

#[test]
fn linear_field_approaches_continuum_value() {
    // refined quadrature on a fine grid against the polar-coordinate integral
    let (s, p) = (0.5, 2.0);
    let exact = linear_field_square_seminorm_p(s, p);
    let g = square(32);
    let ops = DiffOps::new(&g);
    let f: Vec<f64> = g.x.iter().map(|x| x[0]).collect();
    let np = NormParams::new(s, p, 0.0).unwrap();
    let got = seminorm_refined(&g, &ops, &f, &np).powf(p);
    assert!((got - exact).abs() < 0.05 * exact, "{got} vs {exact}");
}

#[test]
fn norms_of_scaled_fields() {
    let g = square(10);
    let ops = DiffOps::new(&g);
    let np = NormParams::new(0.6, 3.0, 0.0).unwrap();
    let f = smooth(&g);
    let f2: Vec<f64> = f.iter().map(|v| -3.0 * v).collect();
    let a = w1sp_norm_scalar(&g, &ops, &f, &np).unwrap();
    let b = w1sp_norm_scalar(&g, &ops, &f2, &np).unwrap();
    assert!((b - 3.0 * a).abs() < 1e-12 * b);
}

#[test]
fn invalid_parameters_rejected() {
    assert!(NormParams::new(0.0, 2.0, 0.0).is_err());
    assert!(NormParams::new(1.0, 2.0, 0.0).is_err());
    assert!(NormParams::new(0.5, 0.5, 0.0).is_err());
    assert!(NormParams::new(0.5, 2.0, -1.0).is_err());
}

fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn homogeneity(f in field_strategy(81), c in -5.0f64..5.0) {
        let g = square(8);
        let np = NormParams::new(0.4, 3.0, 0.0).unwrap();
        let cf: Vec<f64> = f.iter().map(|v| c * v).collect();
        let a = seminorm(&g, &cf, &np);
        let b = c.abs() * seminorm(&g, &f, &np);
        prop_assert!((a - b).abs() <= 1e-9 * b.max(1e-300));
    }

    #[test]
    fn triangle_inequality(f in field_strategy(81), h in field_strategy(81)) {
        let g = square(8);
        let np = NormParams::new(0.7, 4.0, 1e-6).unwrap();
        let sum: Vec<f64> = f.iter().zip(&h).map(|(a, b)| a + b).collect();
        let lhs = seminorm(&g, &sum, &np);
        let rhs = seminorm(&g, &f, &np) + seminorm(&g, &h, &np);
        prop_assert!(lhs <= rhs * (1.0 + 1e-9));
    }

    #[test]
    fn shift_invariance(f in field_strategy(81), c in -3.0f64..3.0) {
        let g = square(8);
        let np = NormParams::new(0.5, 5.0, 0.0).unwrap();
        let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
        let a = seminorm(&g, &f, &np);
        let b = seminorm(&g, &shifted, &np);
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }
}
