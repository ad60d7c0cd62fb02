use inflow_ns::boundary::{BoundaryData, SpaceFn};
use inflow_ns::diff::DiffOps;
use inflow_ns::fields::{lq_norm, w12_norm, NormParams};
use inflow_ns::geometry::Domain;
use inflow_ns::grid::Grid;
use inflow_ns::momentum::FluidParams;
use inflow_ns::picard::*;
use inflow_ns::report::IterationStatus;
use inflow_ns::Error;

struct Setup {
    g: Grid,
    ops: DiffOps,
    params: FluidParams,
    np: NormParams,
    opts: PicardOptions,
}

impl Setup {
    fn new(domain: &Domain, n: usize) -> Self {
        let g = Grid::new(domain, n, n).unwrap();
        let ops = DiffOps::new(&g);
        Self {
            g,
            ops,
            params: FluidParams::default(),
            np: NormParams::new(0.5, 5.0, 0.0).unwrap(),
            opts: PicardOptions::default(),
        }
    }

    fn input<'a>(&'a self, data: &'a BoundaryData) -> PicardInput<'a> {
        PicardInput { grid: &self.g, ops: &self.ops, params: &self.params, data, np: &self.np, opts: &self.opts }
    }
}

fn inflow_data(expr: &str) -> BoundaryData {
    let mut d = BoundaryData::background(SpaceFn::Constant(1.0));
    d.density = SpaceFn::parse(expr).unwrap();
    d
}

fn lens_data() -> BoundaryData {
    let mut d = inflow_data("0.01*bump(x2,0.1,0.9)");
    d.normal_velocity = SpaceFn::parse("0.005*bump(x2,0.1,0.9)*x1").unwrap();
    d.stress = SpaceFn::parse("0.005*bump(x2,0.1,0.9)").unwrap();
    d
}

#[test]
fn square_inflow_density_converges() {
    let s = Setup::new(&Domain::rectangle(1.0, 1.0).unwrap(), 32);
    let data = inflow_data("0.01*sin(2*pi*x2)");
    let r = picard_solve(&s.input(&data)).unwrap().report;
    assert_eq!(r.status, IterationStatus::Converged);
    assert!(r.max_q().unwrap() < 0.5);
    assert!(r.residual.max_linf() < 1e-8);
    assert!(r.min_rho > 0.5);
}

#[test]
fn lens_mixed_data_converges() {
    let s = Setup::new(&Domain::lens(1.0, 1.0).unwrap(), 32);
    let data = lens_data();
    let r = picard_solve(&s.input(&data)).unwrap().report;
    assert_eq!(r.status, IterationStatus::Converged);
    assert!(r.residual.max_linf() < 1e-8);
}

#[test]
fn extra_sweep_from_fixed_point_is_still() {
    let s = Setup::new(&Domain::lens(1.0, 1.0).unwrap(), 24);
    let data = lens_data();
    let inp = s.input(&data);
    let out = picard_solve(&inp).unwrap();
    let st = PicardStepper::new(&inp).unwrap();
    let (u, w, _, _) = st.step(&out.u, &out.w).unwrap();
    let du = [
        u[0].iter().zip(&out.u[0]).map(|(a, b)| a - b).collect(),
        u[1].iter().zip(&out.u[1]).map(|(a, b)| a - b).collect(),
    ];
    let dw: Vec<f64> = w.iter().zip(&out.w).map(|(a, b)| a - b).collect();
    let step = w12_norm(&s.g, &s.ops, &du) + lq_norm(&s.g, &dw, 2.0).unwrap();
    assert!(step < s.opts.tol, "{step}");
}

#[test]
fn distinct_initial_guesses_meet() {
    let s = Setup::new(&Domain::rectangle(1.0, 1.0).unwrap(), 24);
    let data = inflow_data("0.01*sin(2*pi*x2)");
    let inp = s.input(&data);
    let a = picard_solve(&inp).unwrap();
    let n = s.g.len();
    let u_init = [s.g.x.iter().map(|x| 0.01 * x[1] * (1.0 - x[1])).collect(), vec![0.0; n]];
    let w_init: Vec<f64> = s.g.x.iter().map(|x| 0.02 * x[0]).collect();
    let b = picard_solve_from(&inp, u_init, w_init).unwrap();
    let du = [
        a.u[0].iter().zip(&b.u[0]).map(|(x, y)| x - y).collect(),
        a.u[1].iter().zip(&b.u[1]).map(|(x, y)| x - y).collect(),
    ];
    let dw: Vec<f64> = a.w.iter().zip(&b.w).map(|(x, y)| x - y).collect();
    let gap = w12_norm(&s.g, &s.ops, &du) + lq_norm(&s.g, &dw, 2.0).unwrap();
    assert!(gap < 10.0 * s.opts.tol, "{gap}");
}

#[test]
fn halving_data_does_not_slow_contraction() {
    let s = Setup::new(&Domain::rectangle(1.0, 1.0).unwrap(), 24);
    let mut q = Vec::new();
    for scale in [0.3, 0.15] {
        let mut data = inflow_data("0.02*sin(2*pi*x2)");
        data.normal_velocity = SpaceFn::parse("0.01*sin(pi*x2)^2*(2*x1-1)").unwrap();
        data.scale = scale;
        q.push(picard_solve(&s.input(&data)).unwrap().report.max_q().unwrap());
    }
    assert!(q[1] <= q[0] * 1.05, "{q:?}");
}

#[test]
fn large_data_is_refused() {
    let s = Setup::new(&Domain::rectangle(1.0, 1.0).unwrap(), 16);
    let data = inflow_data("0.5*sin(2*pi*x2)");
    assert!(matches!(picard_solve(&s.input(&data)), Err(Error::InvalidInput(_))));
}
