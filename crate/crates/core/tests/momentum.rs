use inflow_ns::diff::DiffOps;
use inflow_ns::fields::lq_norm;
use inflow_ns::geometry::Domain;
use inflow_ns::grid::Grid;
use inflow_ns::momentum::*;
use inflow_ns::oracle::mms_case;

struct MmsRun {
    err_l2: f64,
    err_linf: f64,
    identity: f64,
}

fn mms_run(n: usize, case: &str) -> MmsRun {
    let g = Grid::new(&Domain::rectangle(1.0, 1.0).unwrap(), n, n).unwrap();
    let ops = DiffOps::new(&g);
    let p = FluidParams { mu: 1.0, nu: 0.5, gamma: 1.0, kappa: 1.0 };
    let c = mms_case(case).unwrap();
    let fr = vec![1.0; g.len()];
    let w: Vec<f64> = g.x.iter().map(|&x| c.w(x)).collect();
    // full forcing; the assembly subtracts the discrete gamma grad w
    let mut f = [vec![0.0; g.len()], vec![0.0; g.len()]];
    for k in 0..g.len() {
        let full = c.momentum_forcing(g.x[k], p.mu, p.nu, p.gamma);
        f[0][k] = full[0];
        f[1][k] = full[1];
    }
    let b: Vec<f64> = (0..g.len())
        .map(|k| if g.tags[k].has_normal() { c.slip_forcing(g.x[k], g.normals[k], p.mu, 1.0) } else { 0.0 })
        .collect();
    let sys = assemble_momentum(&g, &ops, &p, &fr, &w, &f, &b).unwrap();
    let u = solve_momentum(&g, &sys, SolverKind::Direct).unwrap();
    let e: Vec<f64> = (0..g.len())
        .map(|k| {
            let ue = c.u(g.x[k]);
            (u[0][k] - ue[0]).hypot(u[1][k] - ue[1])
        })
        .collect();
    let t = energy_terms(&g, &ops, &p, &fr, &u, &w, &f, &b);
    MmsRun {
        err_l2: lq_norm(&g, &e, 2.0).unwrap(),
        err_linf: lq_norm(&g, &e, f64::INFINITY).unwrap(),
        identity: t.residual.abs(),
    }
}

#[test]
fn mms_second_order() {
    let runs: Vec<MmsRun> = [16, 32, 64, 128].iter().map(|&n| mms_run(n, "trig1")).collect();
    for w in runs.windows(2) {
        let o2 = (w[0].err_l2 / w[1].err_l2).log2();
        let oi = (w[0].err_linf / w[1].err_linf).log2();
        assert!(o2 >= 1.9 && oi >= 1.5, "orders {o2} {oi}");
        assert!(w[1].identity < w[0].identity);
    }
}

#[test]
fn cubic_case_is_reproduced() {
    // the stencils are exact on this polynomial pair
    assert!(mms_run(16, "poly2").err_linf < 1e-10);
}
